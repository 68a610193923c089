#pragma once

#include <array>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "vdegrade/frame.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

enum class KernelFamily {
  kIso,
  kAniso,
  kGeneralizedIso,
  kGeneralizedAniso,
  kPlateauIso,
  kPlateauAniso,
  kSinc,
};

inline constexpr std::size_t kKernelFamilyCount = 7;
inline constexpr std::array<KernelFamily, kKernelFamilyCount> kAllKernelFamilies = {
    KernelFamily::kIso,          KernelFamily::kAniso,        KernelFamily::kGeneralizedIso,
    KernelFamily::kGeneralizedAniso, KernelFamily::kPlateauIso, KernelFamily::kPlateauAniso,
    KernelFamily::kSinc};

std::string_view to_string(KernelFamily family) noexcept;
KernelFamily kernel_family_from_string(std::string_view name);
bool is_isotropic(KernelFamily family) noexcept;
bool has_shape_beta(KernelFamily family) noexcept;

enum class SincWindow { kNone, kRaisedCosine };

std::string_view to_string(SincWindow window) noexcept;
SincWindow sinc_window_from_string(std::string_view name);

struct KernelSpec {
  KernelFamily family = KernelFamily::kIso;
  int size = 7;
  double sigma_x = 1.0;
  double sigma_y = 1.0;
  double rotation_theta = 0.0;
  std::optional<double> shape_beta;    // generalized_* and plateau_* only
  std::optional<double> cutoff_omega;  // sinc only
  SincWindow sinc_window = SincWindow::kNone;

  friend bool operator==(const KernelSpec&, const KernelSpec&) = default;
};

/// Throws ArgumentError when the spec violates the KernelSpec invariants.
void validate(const KernelSpec& spec);

/// Sampling ranges for blur kernels. Defaults follow the blind-SR degradation
/// settings: the family list and its probabilities, odd sizes 7..21,
/// sigma in [0.2, 3], beta in [0.5, 4] (generalized) and [1, 2] (plateau),
/// sinc cutoff in [pi/3, pi].
struct KernelSampling {
  std::array<double, kKernelFamilyCount> family_probabilities = {0.405, 0.225, 0.108, 0.027,
                                                                 0.108, 0.027, 0.1};
  std::array<int, 2> size = {7, 21};
  std::array<double, 2> sigma = {0.2, 3.0};
  std::array<double, 2> generalized_beta = {0.5, 4.0};
  std::array<double, 2> plateau_beta = {1.0, 2.0};
  std::array<double, 2> sinc_cutoff;
  SincWindow sinc_window = SincWindow::kNone;

  KernelSampling();
  friend bool operator==(const KernelSampling&, const KernelSampling&) = default;
};

KernelSpec sample_kernel_spec(SeededRng& rng, const KernelSampling& sampling = {});

/// Normalized square blur kernel.
class Kernel {
 public:
  Kernel(int size, std::vector<double> taps);

  int size() const noexcept { return size_; }
  int radius() const noexcept { return size_ / 2; }
  /// Tap at offset (dy, dx) from the center, each in [-radius, radius].
  double tap(int dy, int dx) const noexcept {
    return taps_[static_cast<std::size_t>((dy + radius()) * size_ + dx + radius())];
  }
  const std::vector<double>& taps() const noexcept { return taps_; }
  double sum_of_squares() const noexcept;

  static Kernel delta(int size);

 private:
  int size_;
  std::vector<double> taps_;
};

Kernel make_kernel(const KernelSpec& spec);

/// Per-channel 2-D correlation with reflect-101 borders; output keeps the
/// input dimensions. The kernel must be strictly smaller than both frame
/// dimensions.
Frame convolve(const Frame& frame, const Kernel& kernel);

}  // namespace vdegrade
