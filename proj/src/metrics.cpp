#include "vdegrade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double v) noexcept {
    const double t = sum_ + v;
    if (std::fabs(sum_) >= std::fabs(v)) {
      comp_ += (sum_ - t) + v;
    } else {
      comp_ += (v - t) + sum_;
    }
    sum_ = t;
  }
  double value() const noexcept { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

void require_same_shape(const Frame& a, const Frame& b, const char* what) {
  if (!a.same_shape(b)) {
    throw ShapeError(std::string(what) + ": frame shapes differ (" + std::to_string(a.height()) + "x" +
                     std::to_string(a.width()) + " vs " + std::to_string(b.height()) + "x" +
                     std::to_string(b.width()) + ")");
  }
}

}  // namespace

Frame residual(const Frame& degraded, const Frame& clean) {
  require_same_shape(degraded, clean, "residual");
  Frame out(degraded.height(), degraded.width());
  auto d = degraded.samples();
  auto c = clean.samples();
  auto o = out.samples();
  for (std::size_t i = 0; i < o.size(); ++i) o[i] = d[i] - c[i];
  return out;
}

ResidualStats stats(std::span<const double> samples, int bins) {
  if (samples.empty()) throw ArgumentError("stats: empty input");
  if (bins <= 0) throw ArgumentError("stats: bin count must be positive");
  CompensatedSum total;
  for (double v : samples) {
    if (!std::isfinite(v)) throw ArgumentError("stats: non-finite sample");
    total.add(v);
  }
  const auto n = static_cast<double>(samples.size());
  ResidualStats s;
  s.sample_count = samples.size();
  s.mean = total.value() / n;

  CompensatedSum sq;
  s.histogram.assign(static_cast<std::size_t>(bins), 0);
  const double width = 2.0 / bins;
  for (double v : samples) {
    const double d = v - s.mean;
    sq.add(d * d);
    auto bin = static_cast<long>(std::floor((v + 1.0) / width));
    bin = std::clamp(bin, 0L, static_cast<long>(bins - 1));
    ++s.histogram[static_cast<std::size_t>(bin)];
  }
  s.variance = std::max(0.0, sq.value() / n);
  s.std = std::sqrt(s.variance);
  return s;
}

ResidualStats merge(const ResidualStats& a, const ResidualStats& b) {
  if (a.sample_count == 0) return b;
  if (b.sample_count == 0) return a;
  if (a.histogram.size() != b.histogram.size()) throw ArgumentError("merge: histogram bin counts differ");
  const auto na = static_cast<double>(a.sample_count);
  const auto nb = static_cast<double>(b.sample_count);
  const double n = na + nb;
  const double delta = b.mean - a.mean;
  ResidualStats out;
  out.sample_count = a.sample_count + b.sample_count;
  out.mean = a.mean + delta * nb / n;
  const double m2 = a.variance * na + b.variance * nb + delta * delta * na * nb / n;
  out.variance = std::max(0.0, m2 / n);
  out.std = std::sqrt(out.variance);
  out.histogram.resize(a.histogram.size());
  for (std::size_t i = 0; i < a.histogram.size(); ++i) out.histogram[i] = a.histogram[i] + b.histogram[i];
  return out;
}

double mse(const Frame& a, const Frame& b) {
  require_same_shape(a, b, "mse");
  CompensatedSum acc;
  auto sa = a.samples();
  auto sb = b.samples();
  for (std::size_t i = 0; i < sa.size(); ++i) {
    const double d = sa[i] - sb[i];
    acc.add(d * d);
  }
  return acc.value() / static_cast<double>(sa.size());
}

double mse(const Clip& a, const Clip& b) {
  if (!a.same_shape(b)) throw ShapeError("mse: clip shapes differ");
  CompensatedSum acc;
  for (std::size_t i = 0; i < a.length(); ++i) acc.add(mse(a[i], b[i]));
  return acc.value() / static_cast<double>(a.length());
}

double psnr_from_mse(double value) noexcept {
  if (value <= 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(1.0 / value);
}

double psnr(const Frame& a, const Frame& b) { return psnr_from_mse(mse(a, b)); }
double psnr(const Clip& a, const Clip& b) { return psnr_from_mse(mse(a, b)); }

Frame clamp_unit(Frame frame) {
  for (double& v : frame.samples()) v = std::clamp(v, 0.0, 1.0);
  return frame;
}

Clip clamp_unit(Clip clip) {
  for (auto& f : clip.frames()) f = clamp_unit(std::move(f));
  return clip;
}

double block_boundary_metric(const Frame& frame) {
  if (frame.width() < 9) throw ArgumentError("block_boundary_metric: frame narrower than 9 columns");
  CompensatedSum boundary;
  CompensatedSum interior;
  std::size_t n_boundary = 0;
  std::size_t n_interior = 0;
  for (int y = 0; y < frame.height(); ++y) {
    for (int x = 1; x < frame.width(); ++x) {
      for (int c = 0; c < kChannels; ++c) {
        const double g = std::fabs(frame.at(y, x, c) - frame.at(y, x - 1, c));
        if (x % 8 == 0) {
          boundary.add(g);
          ++n_boundary;
        } else {
          interior.add(g);
          ++n_interior;
        }
      }
    }
  }
  return boundary.value() / static_cast<double>(n_boundary) - interior.value() / static_cast<double>(n_interior);
}

double chi_square_distance(const ResidualStats& a, const ResidualStats& b) {
  if (a.histogram.size() != b.histogram.size()) throw ArgumentError("chi_square_distance: bin counts differ");
  if (a.sample_count == 0 || b.sample_count == 0) throw ArgumentError("chi_square_distance: empty histogram");
  double d = 0.0;
  for (std::size_t i = 0; i < a.histogram.size(); ++i) {
    const double p = static_cast<double>(a.histogram[i]) / static_cast<double>(a.sample_count);
    const double q = static_cast<double>(b.histogram[i]) / static_cast<double>(b.sample_count);
    if (p + q > 0.0) d += (p - q) * (p - q) / (p + q);
  }
  return 0.5 * d;
}

}  // namespace vdegrade
