#pragma once

#include <array>
#include <string_view>

#include "vdegrade/frame.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

enum class ResampleMode { kBilinear, kArea, kBicubic };

std::string_view to_string(ResampleMode mode) noexcept;
ResampleMode resample_mode_from_string(std::string_view name);

inline constexpr double kDefaultBicubicA = -0.5;

/// Resize with half-pixel-centered coordinates (align-corners false).
///   bilinear: two-tap linear interpolation, coordinates clamped at borders.
///   area: exact integral of the source over each output footprint, for any
///         (including non-integer and upscaling) factor.
///   bicubic: Keys cubic convolution with parameter a, clamped source
///         indices; the result is clamped to [0, 1].
Frame resize(const Frame& frame, int target_height, int target_width, ResampleMode mode,
             double bicubic_a = kDefaultBicubicA);

/// Resizing blur parameters. The first resize goes to round(dim * scale), the
/// second returns to the original size.
struct ResizeSpec {
  double scale = 1.0;
  ResampleMode mode = ResampleMode::kBilinear;
  double bicubic_a = kDefaultBicubicA;
  friend bool operator==(const ResizeSpec&, const ResizeSpec&) = default;
};

Frame resizing_blur(const Frame& frame, const ResizeSpec& spec);

struct ResizeSampling {
  std::array<double, 2> scale = {0.5, 2.0};
  std::array<double, 3> mode_probabilities = {1.0 / 3.0, 1.0 / 3.0, 1.0 / 3.0};  // bilinear, area, bicubic
  double bicubic_a = kDefaultBicubicA;
  friend bool operator==(const ResizeSampling&, const ResizeSampling&) = default;
};

ResizeSpec sample_resize_spec(SeededRng& rng, const ResizeSampling& sampling = {});

}  // namespace vdegrade
