#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "vdegrade/frame.hpp"

namespace vdegrade {

inline constexpr int kDefaultHistogramBins = 201;

/// Summary of a residual (degraded minus clean) sample set.
///
/// Variance is the population variance. The histogram covers [-1, 1] in
/// equal-width bins; samples beyond either end are counted in the edge bin so
/// that counts always sum to sample_count.
struct ResidualStats {
  double mean = 0.0;
  double variance = 0.0;
  double std = 0.0;
  std::vector<std::uint64_t> histogram;
  std::uint64_t sample_count = 0;
};

/// Elementwise degraded - clean, unclamped.
Frame residual(const Frame& degraded, const Frame& clean);

ResidualStats stats(std::span<const double> samples, int bins = kDefaultHistogramBins);
inline ResidualStats stats(const Frame& raster, int bins = kDefaultHistogramBins) {
  return stats(raster.samples(), bins);
}

/// Pooled statistics of two disjoint sample sets (Chan et al. update).
/// Histograms must have equal bin counts.
ResidualStats merge(const ResidualStats& a, const ResidualStats& b);

/// Symmetric chi-square distance between normalized histograms,
/// 0.5 * sum (p - q)^2 / (p + q), in [0, 1]. Bin counts must match.
double chi_square_distance(const ResidualStats& a, const ResidualStats& b);

double mse(const Frame& a, const Frame& b);
double mse(const Clip& a, const Clip& b);

/// 10 log10(1 / MSE) over all channels (and frames); +infinity when MSE is 0.
double psnr(const Frame& a, const Frame& b);
double psnr(const Clip& a, const Clip& b);
double psnr_from_mse(double mse) noexcept;

Frame clamp_unit(Frame frame);
Clip clamp_unit(Clip clip);

/// Mean |horizontal gradient| across column pairs (8k-1, 8k) minus the mean
/// over every other adjacent column pair. Positive values indicate 8-pixel
/// block structure.
double block_boundary_metric(const Frame& frame);

}  // namespace vdegrade
