#pragma once

#include <array>
#include <string_view>
#include <vector>

#include "vdegrade/frame.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

// Pixel-domain stochastic degradations. Strength parameters quoted on the
// 0-255 scale (sigma_255, level_255) are divided by 255 when applied.

struct GaussianNoiseSpec {
  double sigma_255 = 0.0;
  bool grayscale = false;  // one draw per pixel replicated over channels
  friend bool operator==(const GaussianNoiseSpec&, const GaussianNoiseSpec&) = default;
};

/// alpha is the log10 photon scale; +infinity disables the noise.
struct PoissonNoiseSpec {
  double alpha = 3.0;
  friend bool operator==(const PoissonNoiseSpec&, const PoissonNoiseSpec&) = default;
};

struct SpeckleNoiseSpec {
  double level_255 = 0.0;
  bool grayscale = false;
  friend bool operator==(const SpeckleNoiseSpec&, const SpeckleNoiseSpec&) = default;
};

enum class BayerPattern { kRGGB, kBGGR, kGRBG, kGBRG };

std::string_view to_string(BayerPattern pattern) noexcept;
BayerPattern bayer_pattern_from_string(std::string_view name);

using Matrix3 = std::array<std::array<double, 3>, 3>;

/// Default color-correction matrix: near identity, each row sums to 1.
inline constexpr Matrix3 kDefaultCcm = {{{1.20, -0.15, -0.05}, {-0.10, 1.20, -0.10}, {-0.05, -0.15, 1.20}}};
inline constexpr Matrix3 kIdentityCcm = {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};

struct IspNoiseSpec {
  BayerPattern bayer_pattern = BayerPattern::kRGGB;
  double shot_gain = 0.0;   // linear-domain units per photo-electron
  double read_sigma = 0.0;  // linear-domain std of read noise
  double wb_red = 1.0;
  double wb_blue = 1.0;
  Matrix3 ccm = kIdentityCcm;
  friend bool operator==(const IspNoiseSpec&, const IspNoiseSpec&) = default;
};

void validate(const IspNoiseSpec& spec);

/// Single-channel Bayer raster in the linear sensor domain.
struct RawMosaic {
  int height = 0;
  int width = 0;
  BayerPattern pattern = BayerPattern::kRGGB;
  std::vector<double> samples;

  double& at(int y, int x) noexcept { return samples[static_cast<std::size_t>(y) * width + x]; }
  double at(int y, int x) const noexcept { return samples[static_cast<std::size_t>(y) * width + x]; }
  /// Color channel (0=R, 1=G, 2=B) sampled at (y, x).
  int channel_at(int y, int x) const noexcept;
};

Frame add_gaussian(const Frame& frame, const GaussianNoiseSpec& spec, SeededRng& rng);
/// Poisson(10^alpha x) / 10^alpha per sample. Throws on negative input.
Frame add_poisson(const Frame& frame, const PoissonNoiseSpec& spec, SeededRng& rng);
/// x + x * z with z ~ N(0, (level/255)^2).
Frame add_speckle(const Frame& frame, const SpeckleNoiseSpec& spec, SeededRng& rng);

double srgb_to_linear(double v) noexcept;
double linear_to_srgb(double v) noexcept;

/// sRGB -> linear, inverse CCM, inverse white balance, then mosaic.
RawMosaic isp_reverse(const Frame& frame, const IspNoiseSpec& spec);
/// Poisson(raw / shot_gain) * shot_gain + N(0, read_sigma^2). Negative raw
/// values (possible after the inverse CCM) keep their value with no shot noise.
RawMosaic isp_add_raw_noise(const RawMosaic& raw, const IspNoiseSpec& spec, SeededRng& rng);
/// Bilinear demosaic of a raw mosaic into three linear channels (no clamping).
Frame demosaic_bilinear(const RawMosaic& raw);
/// Demosaic, white balance, CCM, sRGB tone curve, clamp to [0, 1].
Frame isp_forward(const RawMosaic& raw, const IspNoiseSpec& spec);
/// forward(add_raw_noise(reverse(x))).
Frame add_isp_noise(const Frame& frame, const IspNoiseSpec& spec, SeededRng& rng);

struct NoiseSampling {
  std::array<double, 2> gaussian_sigma_255 = {2.0, 50.0};
  double gaussian_grayscale_probability = 0.4;
  std::array<double, 2> poisson_alpha = {2.0, 4.0};
  std::array<double, 2> speckle_level_255 = {0.0, 50.0};
  bool speckle_grayscale = false;
  std::array<double, 2> isp_shot_gain = {1e-4, 1e-2};  // sampled log-uniformly
  std::array<double, 2> isp_read_sigma = {1e-3, 1e-2};
  std::array<double, 2> isp_wb_red = {1.2, 2.4};
  std::array<double, 2> isp_wb_blue = {1.2, 2.4};
  Matrix3 isp_ccm = kDefaultCcm;
  std::vector<BayerPattern> isp_patterns = {BayerPattern::kRGGB, BayerPattern::kBGGR, BayerPattern::kGRBG,
                                            BayerPattern::kGBRG};
  friend bool operator==(const NoiseSampling&, const NoiseSampling&) = default;
};

GaussianNoiseSpec sample_gaussian_spec(SeededRng& rng, const NoiseSampling& sampling = {});
PoissonNoiseSpec sample_poisson_spec(SeededRng& rng, const NoiseSampling& sampling = {});
SpeckleNoiseSpec sample_speckle_spec(SeededRng& rng, const NoiseSampling& sampling = {});
IspNoiseSpec sample_isp_spec(SeededRng& rng, const NoiseSampling& sampling = {});

}  // namespace vdegrade
