#include "vdegrade/noise.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

constexpr std::array<std::string_view, 4> kPatternNames = {"RGGB", "BGGR", "GRBG", "GBRG"};

// Channel of the 2x2 cell origin offsets (row parity, column parity).
constexpr std::array<std::array<int, 4>, 4> kPatternLayout = {{
    {0, 1, 1, 2},  // RGGB
    {2, 1, 1, 0},  // BGGR
    {1, 0, 2, 1},  // GRBG
    {1, 2, 0, 1},  // GBRG
}};

Matrix3 invert(const Matrix3& m) {
  const double det = m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1]) -
                     m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0]) +
                     m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0]);
  if (!(std::fabs(det) > 1e-12) || !std::isfinite(det)) throw ArgumentError("color-correction matrix is singular");
  const double inv = 1.0 / det;
  Matrix3 r;
  r[0][0] = (m[1][1] * m[2][2] - m[1][2] * m[2][1]) * inv;
  r[0][1] = (m[0][2] * m[2][1] - m[0][1] * m[2][2]) * inv;
  r[0][2] = (m[0][1] * m[1][2] - m[0][2] * m[1][1]) * inv;
  r[1][0] = (m[1][2] * m[2][0] - m[1][0] * m[2][2]) * inv;
  r[1][1] = (m[0][0] * m[2][2] - m[0][2] * m[2][0]) * inv;
  r[1][2] = (m[0][2] * m[1][0] - m[0][0] * m[1][2]) * inv;
  r[2][0] = (m[1][0] * m[2][1] - m[1][1] * m[2][0]) * inv;
  r[2][1] = (m[0][1] * m[2][0] - m[0][0] * m[2][1]) * inv;
  r[2][2] = (m[0][0] * m[1][1] - m[0][1] * m[1][0]) * inv;
  return r;
}

std::array<double, 3> mat_apply(const Matrix3& m, const std::array<double, 3>& v) {
  return {m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2], m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
          m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2]};
}

double sample_range(SeededRng& rng, const std::array<double, 2>& r, const char* what) {
  if (!(r[0] <= r[1]) || !std::isfinite(r[0]) || !std::isfinite(r[1])) {
    throw ArgumentError(std::string("invalid sampling range for ") + what);
  }
  return rng.uniform(r[0], r[1]);
}

// Additive Gaussian field: either i.i.d. per sample or one draw per pixel.
void add_normal_field(std::span<double> out, std::span<const double> scale_by, double sigma, bool grayscale,
                      SeededRng& rng) {
  const std::size_t pixels = out.size() / kChannels;
  for (std::size_t p = 0; p < pixels; ++p) {
    if (grayscale) {
      const double z = sigma * rng.normal();
      for (int c = 0; c < kChannels; ++c) {
        const std::size_t i = p * kChannels + c;
        out[i] += scale_by.empty() ? z : scale_by[i] * z;
      }
    } else {
      for (int c = 0; c < kChannels; ++c) {
        const std::size_t i = p * kChannels + c;
        const double z = sigma * rng.normal();
        out[i] += scale_by.empty() ? z : scale_by[i] * z;
      }
    }
  }
}

}  // namespace

std::string_view to_string(BayerPattern pattern) noexcept { return kPatternNames[static_cast<std::size_t>(pattern)]; }

BayerPattern bayer_pattern_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kPatternNames.size(); ++i) {
    if (kPatternNames[i] == name) return static_cast<BayerPattern>(i);
  }
  throw ArgumentError("unknown Bayer pattern '" + std::string(name) + "'");
}

int RawMosaic::channel_at(int y, int x) const noexcept {
  return kPatternLayout[static_cast<std::size_t>(pattern)][static_cast<std::size_t>((y & 1) * 2 + (x & 1))];
}

void validate(const IspNoiseSpec& spec) {
  if (!(spec.wb_red > 0.0) || !(spec.wb_blue > 0.0)) throw ArgumentError("white-balance gains must be positive");
  if (!(spec.shot_gain >= 0.0) || !(spec.read_sigma >= 0.0)) {
    throw ArgumentError("shot_gain and read_sigma must be non-negative");
  }
  for (const auto& row : spec.ccm) {
    if (std::fabs(row[0] + row[1] + row[2] - 1.0) > 1e-6) {
      throw ArgumentError("color-correction matrix rows must sum to 1");
    }
  }
}

Frame add_gaussian(const Frame& frame, const GaussianNoiseSpec& spec, SeededRng& rng) {
  if (!(spec.sigma_255 >= 0.0)) throw ArgumentError("gaussian sigma must be non-negative");
  Frame out = frame;
  add_normal_field(out.samples(), {}, spec.sigma_255 / 255.0, spec.grayscale, rng);
  return out;
}

Frame add_poisson(const Frame& frame, const PoissonNoiseSpec& spec, SeededRng& rng) {
  for (double v : frame.samples()) {
    if (v < 0.0) throw ArgumentError("poisson noise requires non-negative samples (clamp first)");
  }
  if (std::isinf(spec.alpha) && spec.alpha > 0.0) return frame;
  if (!std::isfinite(spec.alpha)) throw ArgumentError("poisson alpha must be finite or +inf");
  const double scale = std::pow(10.0, spec.alpha);
  Frame out = frame;
  for (double& v : out.samples()) v = static_cast<double>(rng.poisson(scale * v)) / scale;
  return out;
}

Frame add_speckle(const Frame& frame, const SpeckleNoiseSpec& spec, SeededRng& rng) {
  if (!(spec.level_255 >= 0.0)) throw ArgumentError("speckle level must be non-negative");
  Frame out = frame;
  add_normal_field(out.samples(), frame.samples(), spec.level_255 / 255.0, spec.grayscale, rng);
  return out;
}

double srgb_to_linear(double v) noexcept {
  return v <= 0.04045 ? v / 12.92 : std::pow((v + 0.055) / 1.055, 2.4);
}

double linear_to_srgb(double v) noexcept {
  return v <= 0.0031308 ? 12.92 * v : 1.055 * std::pow(v, 1.0 / 2.4) - 0.055;
}

RawMosaic isp_reverse(const Frame& frame, const IspNoiseSpec& spec) {
  validate(spec);
  const Matrix3 inverse_ccm = invert(spec.ccm);
  RawMosaic raw{frame.height(), frame.width(), spec.bayer_pattern,
                std::vector<double>(frame.pixel_count())};
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 0; x < frame.width(); ++x) {
      std::array<double, 3> lin{srgb_to_linear(frame.at(y, x, 0)), srgb_to_linear(frame.at(y, x, 1)),
                                srgb_to_linear(frame.at(y, x, 2))};
      auto cam = mat_apply(inverse_ccm, lin);
      cam[0] /= spec.wb_red;
      cam[2] /= spec.wb_blue;
      raw.at(y, x) = cam[static_cast<std::size_t>(raw.channel_at(y, x))];
    }
  }
  return raw;
}

RawMosaic isp_add_raw_noise(const RawMosaic& raw, const IspNoiseSpec& spec, SeededRng& rng) {
  validate(spec);
  RawMosaic out = raw;
  for (double& v : out.samples) {
    if (spec.shot_gain > 0.0 && v > 0.0) {
      v = static_cast<double>(rng.poisson(v / spec.shot_gain)) * spec.shot_gain;
    }
    if (spec.read_sigma > 0.0) v += spec.read_sigma * rng.normal();
  }
  return out;
}

Frame demosaic_bilinear(const RawMosaic& raw) {
  if (raw.height < 2 || raw.width < 2) throw ArgumentError("demosaic requires at least a 2x2 mosaic");
  static constexpr double kGreen[3][3] = {{0, 1, 0}, {1, 4, 1}, {0, 1, 0}};
  static constexpr double kRedBlue[3][3] = {{1, 2, 1}, {2, 4, 2}, {1, 2, 1}};
  // reflect-101 keeps Bayer parity at the borders.
  auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };
  Frame out(raw.height, raw.width);
  for (int y = 0; y < raw.height; ++y) {
    for (int x = 0; x < raw.width; ++x) {
      std::array<double, 3> num{};
      std::array<double, 3> den{};
      for (int dy = -1; dy <= 1; ++dy) {
        const int sy = reflect(y + dy, raw.height);
        for (int dx = -1; dx <= 1; ++dx) {
          const int sx = reflect(x + dx, raw.width);
          const int c = raw.channel_at(sy, sx);
          const double k = c == 1 ? kGreen[dy + 1][dx + 1] : kRedBlue[dy + 1][dx + 1];
          num[static_cast<std::size_t>(c)] += k * raw.at(sy, sx);
          den[static_cast<std::size_t>(c)] += k;
        }
      }
      for (int c = 0; c < kChannels; ++c) {
        const auto ci = static_cast<std::size_t>(c);
        out.at(y, x, c) = raw.channel_at(y, x) == c ? raw.at(y, x) : num[ci] / den[ci];
      }
    }
  }
  return out;
}

Frame isp_forward(const RawMosaic& raw, const IspNoiseSpec& spec) {
  validate(spec);
  Frame out = demosaic_bilinear(raw);
  for (int y = 0; y < out.height(); ++y) {
    for (int x = 0; x < out.width(); ++x) {
      std::array<double, 3> cam{out.at(y, x, 0) * spec.wb_red, out.at(y, x, 1), out.at(y, x, 2) * spec.wb_blue};
      const auto lin = mat_apply(spec.ccm, cam);
      for (int c = 0; c < kChannels; ++c) {
        out.at(y, x, c) = std::clamp(linear_to_srgb(lin[static_cast<std::size_t>(c)]), 0.0, 1.0);
      }
    }
  }
  return out;
}

Frame add_isp_noise(const Frame& frame, const IspNoiseSpec& spec, SeededRng& rng) {
  return isp_forward(isp_add_raw_noise(isp_reverse(frame, spec), spec, rng), spec);
}

GaussianNoiseSpec sample_gaussian_spec(SeededRng& rng, const NoiseSampling& sampling) {
  GaussianNoiseSpec spec;
  spec.sigma_255 = sample_range(rng, sampling.gaussian_sigma_255, "gaussian sigma");
  spec.grayscale = rng.uniform01() < sampling.gaussian_grayscale_probability;
  return spec;
}

PoissonNoiseSpec sample_poisson_spec(SeededRng& rng, const NoiseSampling& sampling) {
  return PoissonNoiseSpec{sample_range(rng, sampling.poisson_alpha, "poisson alpha")};
}

SpeckleNoiseSpec sample_speckle_spec(SeededRng& rng, const NoiseSampling& sampling) {
  return SpeckleNoiseSpec{sample_range(rng, sampling.speckle_level_255, "speckle level"), sampling.speckle_grayscale};
}

IspNoiseSpec sample_isp_spec(SeededRng& rng, const NoiseSampling& sampling) {
  if (sampling.isp_patterns.empty()) throw ArgumentError("isp sampling needs at least one Bayer pattern");
  IspNoiseSpec spec;
  spec.ccm = sampling.isp_ccm;
  std::vector<double> uniform(sampling.isp_patterns.size(), 1.0);
  spec.bayer_pattern = sampling.isp_patterns[rng.categorical(uniform)];
  const auto& g = sampling.isp_shot_gain;
  if (g[0] > 0.0) {
    if (!(g[0] <= g[1])) throw ArgumentError("invalid sampling range for isp shot gain");
    spec.shot_gain = std::exp(rng.uniform(std::log(g[0]), std::log(g[1])));
  } else {
    spec.shot_gain = sample_range(rng, g, "isp shot gain");
  }
  spec.read_sigma = sample_range(rng, sampling.isp_read_sigma, "isp read sigma");
  spec.wb_red = sample_range(rng, sampling.isp_wb_red, "isp red gain");
  spec.wb_blue = sample_range(rng, sampling.isp_wb_blue, "isp blue gain");
  validate(spec);
  return spec;
}

}  // namespace vdegrade
