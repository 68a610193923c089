#include "vdegrade/resample.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

// Sparse 1-D resampling matrix: output i = sum_k weight[k] * input[index[k]].
struct Taps {
  std::vector<std::size_t> offsets;  // size n_out + 1
  std::vector<int> index;
  std::vector<double> weight;
};

Taps bilinear_taps(int n_in, int n_out) {
  Taps t;
  t.offsets.push_back(0);
  const double ratio = static_cast<double>(n_in) / n_out;
  for (int i = 0; i < n_out; ++i) {
    const double s = std::clamp((i + 0.5) * ratio - 0.5, 0.0, static_cast<double>(n_in - 1));
    const int i0 = static_cast<int>(std::floor(s));
    const double f = s - i0;
    t.index.push_back(i0);
    t.weight.push_back(1.0 - f);
    if (f > 0.0) {
      t.index.push_back(std::min(i0 + 1, n_in - 1));
      t.weight.push_back(f);
    }
    t.offsets.push_back(t.index.size());
  }
  return t;
}

Taps area_taps(int n_in, int n_out) {
  Taps t;
  t.offsets.push_back(0);
  const double ratio = static_cast<double>(n_in) / n_out;
  for (int i = 0; i < n_out; ++i) {
    const double lo = i * ratio;
    const double hi = (i + 1) * ratio;
    const int j0 = static_cast<int>(std::floor(lo));
    const int j1 = std::min(static_cast<int>(std::ceil(hi)), n_in);
    for (int j = j0; j < j1; ++j) {
      const double overlap = std::min(hi, j + 1.0) - std::max(lo, static_cast<double>(j));
      if (overlap <= 0.0) continue;
      t.index.push_back(j);
      t.weight.push_back(overlap / ratio);
    }
    t.offsets.push_back(t.index.size());
  }
  return t;
}

double cubic_weight(double x, double a) {
  x = std::fabs(x);
  if (x <= 1.0) return ((a + 2.0) * x - (a + 3.0)) * x * x + 1.0;
  if (x < 2.0) return ((a * x - 5.0 * a) * x + 8.0 * a) * x - 4.0 * a;
  return 0.0;
}

Taps bicubic_taps(int n_in, int n_out, double a) {
  Taps t;
  t.offsets.push_back(0);
  const double ratio = static_cast<double>(n_in) / n_out;
  for (int i = 0; i < n_out; ++i) {
    const double s = (i + 0.5) * ratio - 0.5;
    const int base = static_cast<int>(std::floor(s));
    const double f = s - base;
    for (int k = -1; k <= 2; ++k) {
      const double wgt = cubic_weight(k - f, a);
      if (wgt == 0.0) continue;
      t.index.push_back(std::clamp(base + k, 0, n_in - 1));
      t.weight.push_back(wgt);
    }
    t.offsets.push_back(t.index.size());
  }
  return t;
}

Taps make_taps(int n_in, int n_out, ResampleMode mode, double a) {
  switch (mode) {
    case ResampleMode::kBilinear:
      return bilinear_taps(n_in, n_out);
    case ResampleMode::kArea:
      return area_taps(n_in, n_out);
    case ResampleMode::kBicubic:
      return bicubic_taps(n_in, n_out, a);
  }
  return {};
}

}  // namespace

std::string_view to_string(ResampleMode mode) noexcept {
  switch (mode) {
    case ResampleMode::kBilinear:
      return "bilinear";
    case ResampleMode::kArea:
      return "area";
    case ResampleMode::kBicubic:
      return "bicubic";
  }
  return "?";
}

ResampleMode resample_mode_from_string(std::string_view name) {
  if (name == "bilinear") return ResampleMode::kBilinear;
  if (name == "area") return ResampleMode::kArea;
  if (name == "bicubic") return ResampleMode::kBicubic;
  throw ArgumentError("unknown resample mode '" + std::string(name) + "'");
}

Frame resize(const Frame& frame, int target_height, int target_width, ResampleMode mode, double bicubic_a) {
  if (target_height < 1 || target_width < 1) {
    throw ArgumentError("resize target must be at least 1x1, got " + std::to_string(target_height) + "x" +
                        std::to_string(target_width));
  }
  const int h = frame.height();
  const int w = frame.width();
  const Taps tx = make_taps(w, target_width, mode, bicubic_a);
  const Taps ty = make_taps(h, target_height, mode, bicubic_a);

  // Separable passes. Each output is written as ref + sum w_k (v_k - ref)
  // with ref the first tap, which equals sum w_k v_k when the weights sum to
  // one and keeps constant regions bit-exact.
  std::vector<double> mid(static_cast<std::size_t>(h) * target_width * kChannels, 0.0);
  for (int y = 0; y < h; ++y) {
    for (int x = 0; x < target_width; ++x) {
      const std::size_t begin = tx.offsets[static_cast<std::size_t>(x)];
      const std::size_t end = tx.offsets[static_cast<std::size_t>(x) + 1];
      for (int c = 0; c < kChannels; ++c) {
        const double ref = frame.at(y, tx.index[begin], c);
        double acc = 0.0;
        for (std::size_t k = begin; k < end; ++k) acc += tx.weight[k] * (frame.at(y, tx.index[k], c) - ref);
        mid[(static_cast<std::size_t>(y) * target_width + x) * kChannels + c] = ref + acc;
      }
    }
  }
  Frame out(target_height, target_width);
  const std::size_t row = static_cast<std::size_t>(target_width) * kChannels;
  auto o = out.samples();
  for (int y = 0; y < target_height; ++y) {
    double* dst = &o[static_cast<std::size_t>(y) * row];
    const std::size_t begin = ty.offsets[static_cast<std::size_t>(y)];
    const std::size_t end = ty.offsets[static_cast<std::size_t>(y) + 1];
    const double* ref = &mid[static_cast<std::size_t>(ty.index[begin]) * row];
    for (std::size_t k = begin; k < end; ++k) {
      const double* src = &mid[static_cast<std::size_t>(ty.index[k]) * row];
      const double wgt = ty.weight[k];
      for (std::size_t i = 0; i < row; ++i) dst[i] += wgt * (src[i] - ref[i]);
    }
    for (std::size_t i = 0; i < row; ++i) dst[i] += ref[i];
  }
  if (mode == ResampleMode::kBicubic) {
    for (double& v : o) v = std::clamp(v, 0.0, 1.0);
  }
  return out;
}

Frame resizing_blur(const Frame& frame, const ResizeSpec& spec) {
  if (!(spec.scale > 0.0) || !std::isfinite(spec.scale)) throw ArgumentError("resize scale must be positive");
  const auto mid_h = static_cast<long>(std::lround(frame.height() * spec.scale));
  const auto mid_w = static_cast<long>(std::lround(frame.width() * spec.scale));
  if (mid_h < 1 || mid_w < 1) {
    throw ArgumentError("resizing blur: intermediate size " + std::to_string(mid_h) + "x" + std::to_string(mid_w) +
                        " is empty");
  }
  const Frame mid = resize(frame, static_cast<int>(mid_h), static_cast<int>(mid_w), spec.mode, spec.bicubic_a);
  return resize(mid, frame.height(), frame.width(), spec.mode, spec.bicubic_a);
}

ResizeSpec sample_resize_spec(SeededRng& rng, const ResizeSampling& sampling) {
  const auto& s = sampling.scale;
  if (!(s[0] > 0.0) || !(s[0] <= s[1]) || !std::isfinite(s[1])) throw ArgumentError("invalid resize scale range");
  ResizeSpec spec;
  spec.scale = rng.uniform(s[0], s[1]);
  spec.mode = static_cast<ResampleMode>(rng.categorical(sampling.mode_probabilities));
  spec.bicubic_a = sampling.bicubic_a;
  return spec;
}

}  // namespace vdegrade
