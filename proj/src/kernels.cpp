#include "vdegrade/kernels.hpp"

#include <cmath>
#include <numbers>
#include <numeric>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

constexpr std::array<std::string_view, kKernelFamilyCount> kFamilyNames = {
    "iso", "aniso", "generalized_iso", "generalized_aniso", "plateau_iso", "plateau_aniso", "sinc"};

void check_range(const std::array<double, 2>& r, const char* what, double min_allowed) {
  if (!(r[0] <= r[1]) || !(r[0] >= min_allowed) || !std::isfinite(r[1])) {
    throw ArgumentError(std::string("kernel sampling: invalid ") + what + " range");
  }
}

double sinc_profile(double r, double omega) {
  if (r == 0.0) return omega * omega / (4.0 * std::numbers::pi);
  return omega * std::cyl_bessel_j(1.0, omega * r) / (2.0 * std::numbers::pi * r);
}

}  // namespace

std::string_view to_string(KernelFamily family) noexcept { return kFamilyNames[static_cast<std::size_t>(family)]; }

KernelFamily kernel_family_from_string(std::string_view name) {
  for (std::size_t i = 0; i < kFamilyNames.size(); ++i) {
    if (kFamilyNames[i] == name) return static_cast<KernelFamily>(i);
  }
  throw ArgumentError("unknown kernel family '" + std::string(name) + "'");
}

bool is_isotropic(KernelFamily family) noexcept {
  return family == KernelFamily::kIso || family == KernelFamily::kGeneralizedIso ||
         family == KernelFamily::kPlateauIso || family == KernelFamily::kSinc;
}

bool has_shape_beta(KernelFamily family) noexcept {
  return family != KernelFamily::kIso && family != KernelFamily::kAniso && family != KernelFamily::kSinc;
}

std::string_view to_string(SincWindow window) noexcept {
  return window == SincWindow::kNone ? "none" : "raised_cosine";
}

SincWindow sinc_window_from_string(std::string_view name) {
  if (name == "none") return SincWindow::kNone;
  if (name == "raised_cosine") return SincWindow::kRaisedCosine;
  throw ArgumentError("unknown sinc window '" + std::string(name) + "'");
}

KernelSampling::KernelSampling() : sinc_cutoff{std::numbers::pi / 3.0, std::numbers::pi} {}

void validate(const KernelSpec& spec) {
  if (spec.size < 3 || spec.size % 2 == 0) throw ArgumentError("kernel size must be odd and >= 3");
  const bool sinc = spec.family == KernelFamily::kSinc;
  if (!sinc) {
    if (!(spec.sigma_x > 0.0) || !(spec.sigma_y > 0.0) || !std::isfinite(spec.sigma_x) ||
        !std::isfinite(spec.sigma_y)) {
      throw ArgumentError("kernel sigma must be positive and finite");
    }
    if (is_isotropic(spec.family) && (spec.sigma_x != spec.sigma_y || spec.rotation_theta != 0.0)) {
      throw ArgumentError("isotropic kernel requires sigma_x == sigma_y and theta == 0");
    }
  }
  if (has_shape_beta(spec.family) != spec.shape_beta.has_value()) {
    throw ArgumentError("shape_beta must be present exactly for generalized/plateau families");
  }
  if (spec.shape_beta && !(*spec.shape_beta > 0.0)) throw ArgumentError("shape_beta must be positive");
  if (sinc != spec.cutoff_omega.has_value()) throw ArgumentError("cutoff_omega must be present exactly for sinc");
  if (spec.cutoff_omega && !(*spec.cutoff_omega > 0.0 && *spec.cutoff_omega <= std::numbers::pi)) {
    throw ArgumentError("cutoff_omega must lie in (0, pi]");
  }
}

KernelSpec sample_kernel_spec(SeededRng& rng, const KernelSampling& sampling) {
  if (sampling.size[0] < 3 || sampling.size[0] > sampling.size[1] || sampling.size[0] % 2 == 0 ||
      sampling.size[1] % 2 == 0) {
    throw ArgumentError("kernel sampling: size range must be odd bounds with min <= max");
  }
  check_range(sampling.sigma, "sigma", 0.0);
  check_range(sampling.generalized_beta, "generalized_beta", 0.0);
  check_range(sampling.plateau_beta, "plateau_beta", 0.0);
  check_range(sampling.sinc_cutoff, "sinc_cutoff", 0.0);

  KernelSpec spec;
  spec.family = static_cast<KernelFamily>(rng.categorical(sampling.family_probabilities));
  spec.size = sampling.size[0] + 2 * static_cast<int>(rng.uniform_int(0, (sampling.size[1] - sampling.size[0]) / 2));
  if (spec.family == KernelFamily::kSinc) {
    spec.sigma_x = spec.sigma_y = 1.0;  // unused by the sinc profile
    spec.cutoff_omega = rng.uniform(sampling.sinc_cutoff[0], sampling.sinc_cutoff[1]);
    spec.sinc_window = sampling.sinc_window;
    return spec;
  }
  spec.sigma_x = rng.uniform(sampling.sigma[0], sampling.sigma[1]);
  if (is_isotropic(spec.family)) {
    spec.sigma_y = spec.sigma_x;
  } else {
    spec.sigma_y = rng.uniform(sampling.sigma[0], sampling.sigma[1]);
    spec.rotation_theta = rng.uniform(0.0, std::numbers::pi);
  }
  if (spec.family == KernelFamily::kGeneralizedIso || spec.family == KernelFamily::kGeneralizedAniso) {
    spec.shape_beta = rng.uniform(sampling.generalized_beta[0], sampling.generalized_beta[1]);
  } else if (spec.family == KernelFamily::kPlateauIso || spec.family == KernelFamily::kPlateauAniso) {
    spec.shape_beta = rng.uniform(sampling.plateau_beta[0], sampling.plateau_beta[1]);
  }
  return spec;
}

Kernel::Kernel(int size, std::vector<double> taps) : size_(size), taps_(std::move(taps)) {
  if (size < 1 || size % 2 == 0) throw ArgumentError("kernel size must be odd and positive");
  if (taps_.size() != static_cast<std::size_t>(size) * static_cast<std::size_t>(size)) {
    throw ShapeError("kernel tap count does not match size");
  }
}

double Kernel::sum_of_squares() const noexcept {
  return std::accumulate(taps_.begin(), taps_.end(), 0.0, [](double acc, double t) { return acc + t * t; });
}

Kernel Kernel::delta(int size) {
  std::vector<double> taps(static_cast<std::size_t>(size) * static_cast<std::size_t>(size), 0.0);
  taps[taps.size() / 2] = 1.0;
  return Kernel(size, std::move(taps));
}

Kernel make_kernel(const KernelSpec& spec) {
  validate(spec);
  const int radius = spec.size / 2;
  // Inverse covariance R diag(1/sx^2, 1/sy^2) R^T.
  const double c = std::cos(spec.rotation_theta);
  const double s = std::sin(spec.rotation_theta);
  const double ix = 1.0 / (spec.sigma_x * spec.sigma_x);
  const double iy = 1.0 / (spec.sigma_y * spec.sigma_y);
  const double a = c * c * ix + s * s * iy;
  const double b = c * s * (ix - iy);
  const double d = s * s * ix + c * c * iy;

  std::vector<double> taps(static_cast<std::size_t>(spec.size) * static_cast<std::size_t>(spec.size));
  for (int dy = -radius; dy <= radius; ++dy) {
    for (int dx = -radius; dx <= radius; ++dx) {
      const double q = a * dx * dx + 2.0 * b * dx * dy + d * dy * dy;
      double v = 0.0;
      switch (spec.family) {
        case KernelFamily::kIso:
        case KernelFamily::kAniso:
          v = std::exp(-0.5 * q);
          break;
        case KernelFamily::kGeneralizedIso:
        case KernelFamily::kGeneralizedAniso:
          v = std::exp(-0.5 * std::pow(q, *spec.shape_beta));
          break;
        case KernelFamily::kPlateauIso:
        case KernelFamily::kPlateauAniso:
          v = 1.0 / (1.0 + std::pow(q, *spec.shape_beta));
          break;
        case KernelFamily::kSinc: {
          // Radius from the integer offsets directly so the 8 symmetric
          // offsets produce bit-identical taps.
          const double r = std::sqrt(static_cast<double>(dx * dx + dy * dy));
          v = sinc_profile(r, *spec.cutoff_omega);
          if (spec.sinc_window == SincWindow::kRaisedCosine) {
            const double extent = radius + 1.0;
            v *= r < extent ? 0.5 * (1.0 + std::cos(std::numbers::pi * r / extent)) : 0.0;
          }
          break;
        }
      }
      taps[static_cast<std::size_t>((dy + radius) * spec.size + dx + radius)] = v;
    }
  }
  double total = 0.0;
  for (double t : taps) total += t;
  if (!(std::fabs(total) > 1e-300) || !std::isfinite(total)) throw ArgumentError("kernel taps do not normalize");
  for (double& t : taps) t /= total;
  return Kernel(spec.size, std::move(taps));
}

Frame convolve(const Frame& frame, const Kernel& kernel) {
  const int h = frame.height();
  const int w = frame.width();
  if (kernel.size() >= h || kernel.size() >= w) {
    throw ArgumentError("convolve: kernel size " + std::to_string(kernel.size()) + " not smaller than frame " +
                        std::to_string(h) + "x" + std::to_string(w));
  }
  const int r = kernel.radius();
  const int pw = w + 2 * r;
  const int ph = h + 2 * r;
  auto reflect = [](int i, int n) { return i < 0 ? -i : (i >= n ? 2 * n - 2 - i : i); };

  std::vector<double> padded(static_cast<std::size_t>(ph) * pw * kChannels);
  for (int y = 0; y < ph; ++y) {
    const int sy = reflect(y - r, h);
    for (int x = 0; x < pw; ++x) {
      const int sx = reflect(x - r, w);
      for (int c = 0; c < kChannels; ++c) {
        padded[(static_cast<std::size_t>(y) * pw + x) * kChannels + c] = frame.at(sy, sx, c);
      }
    }
  }

  Frame out(h, w, 0.0);
  auto o = out.samples();
  const std::size_t row_len = static_cast<std::size_t>(w) * kChannels;
  for (int dy = -r; dy <= r; ++dy) {
    for (int dx = -r; dx <= r; ++dx) {
      const double t = kernel.tap(dy, dx);
      if (t == 0.0) continue;
      for (int y = 0; y < h; ++y) {
        const double* src = &padded[(static_cast<std::size_t>(y + r + dy) * pw + (r + dx)) * kChannels];
        double* dst = &o[static_cast<std::size_t>(y) * row_len];
        for (std::size_t i = 0; i < row_len; ++i) dst[i] += t * src[i];
      }
    }
  }
  return out;
}

}  // namespace vdegrade
