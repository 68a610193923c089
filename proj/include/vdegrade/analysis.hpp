#pragma once

#include <functional>
#include <string>
#include <vector>

#include "vdegrade/frame.hpp"
#include "vdegrade/pipeline.hpp"
#include "vdegrade/resample.hpp"
#include "vdegrade/rng.hpp"

namespace vdegrade {

// ---------------------------------------------------------------------------
// Downscaling versus noise.

struct DownscaleRow {
  double scale = 1.0;
  ResampleMode mode = ResampleMode::kArea;
  double psnr_db = 0.0;
};

struct DownscaleReport {
  std::vector<DownscaleRow> rows;  // scales distinct, descending
};

/// PSNR(down_s(noisy), down_s(clean)) for each scale. down_s resizes each
/// frame to round(s * dims) (at least 1 pixel); scale 1 is the plain PSNR.
/// Scales must be positive and distinct; rows come back in descending order.
DownscaleReport downscale_noise_report(const Clip& clean, const Clip& noisy, std::vector<double> scales,
                                       ResampleMode mode = ResampleMode::kArea);

// ---------------------------------------------------------------------------
// Order shuffling versus residual spread.

struct Dispersion {
  double mean = 0.0;
  double std = 0.0;  // population std of the per-plan values
  double iqr = 0.0;  // linear-interpolated quartiles
};

Dispersion dispersion(const std::vector<double>& values);

struct VarianceReport {
  std::vector<double> shuffled_stds;
  std::vector<double> fixed_stds;
  Dispersion shuffled;
  Dispersion fixed;
};

/// Samples n_pipelines plans (plan i from the stream of clip index i) and
/// applies each twice to `clean`: in its shuffled order and in canonical
/// order with the same parameter draws and noise streams. Reports the
/// residual std of every run.
VarianceReport shuffle_variance_report(const Clip& clean, const PipelineConfig& config, int n_pipelines,
                                       int jobs = 1);

// ---------------------------------------------------------------------------
// Noise-injection regularization identity.

/// f: R^d -> R^k with first derivatives (k x d, row-major) and the diagonal
/// of each output's Hessian (k x d, entry [m][i] = d2 f_m / dx_i^2).
/// Derivative maps left empty are filled with central differences.
struct DifferentiableModel {
  std::string name;
  int input_dim = 0;
  int output_dim = 0;
  std::function<std::vector<double>(const std::vector<double>&)> eval;
  std::function<std::vector<double>(const std::vector<double>&)> jacobian;
  std::function<std::vector<double>(const std::vector<double>&)> hessian_diag;
};

inline constexpr double kFiniteDifferenceStep = 1e-4;
inline constexpr double kDerivativeTolerance = 1e-4;

std::vector<double> fd_jacobian(const DifferentiableModel& model, const std::vector<double>& x,
                                double step = kFiniteDifferenceStep);
std::vector<double> fd_hessian_diag(const DifferentiableModel& model, const std::vector<double>& x,
                                    double step = kFiniteDifferenceStep);

/// Copy of `model` with any missing derivative map replaced by central differences.
DifferentiableModel with_finite_differences(DifferentiableModel model, double step = kFiniteDifferenceStep);

struct DerivativeCheck {
  double jacobian_error = 0.0;  // max |analytic - fd| / max(1, |analytic|)
  double hessian_error = 0.0;
  double max_error() const noexcept { return jacobian_error > hessian_error ? jacobian_error : hessian_error; }
};

/// Compares the model's derivative maps with central differences at x.
DerivativeCheck finite_difference_check(const DifferentiableModel& model, const std::vector<double>& x,
                                        double step = kFiniteDifferenceStep);

struct TheoremSample {
  std::vector<double> x;
  std::vector<double> y;
};

enum class TheoremEstimator {
  /// Mean of ||f(x+z)-y||^2 over antithetic pairs (z, -z).
  kPlain,
  /// Same pairs minus the mean-zero second-order Taylor terms of the loss.
  /// Removes the O(eta^2) sampling noise so the O(eta^4) remainder is visible.
  kControlVariate,
};

std::string_view to_string(TheoremEstimator e) noexcept;
TheoremEstimator theorem_estimator_from_string(std::string_view name);

struct TheoremOptions {
  TheoremEstimator estimator = TheoremEstimator::kPlain;
  /// Weight of the (f-y)^T (d2f/dx2 diag) 1 term in rhs. The second-order
  /// expansion of E||f(x+z)-y||^2 gives 1; 0.5 is accepted for comparison.
  double curvature_weight = 1.0;
};

struct TheoremResult {
  double lhs = 0.0;
  double rhs = 0.0;
  double gap = 0.0;             // |lhs - rhs|
  double standard_error = 0.0;  // of lhs
  double clean_loss = 0.0;
  std::size_t n_mc = 0;
};

/// lhs: Monte-Carlo estimate of E_z E_(x,y) ||f(x+z)-y||^2, z ~ N(0, eta^2 I),
/// using n_mc noise vectors per sample. rhs: clean loss +
/// eta^2 E[||J||_F^2 + w (f-y)^T (d2f/dx2 diag) 1]. Checks the derivative
/// maps at every sample first and throws ModelError past kDerivativeTolerance.
TheoremResult verify_theorem(const DifferentiableModel& model, const std::vector<TheoremSample>& dataset, double eta,
                             std::size_t n_mc, SeededRng& rng, const TheoremOptions& options = {});

/// Least-squares slope of log(gap) against log(eta).
double log_log_slope(const std::vector<double>& etas, const std::vector<double>& gaps);

// Builtin models.
DifferentiableModel linear_model(std::vector<double> weights, int input_dim, int output_dim);
DifferentiableModel random_linear_model(int input_dim, int output_dim, SeededRng& rng);
DifferentiableModel quadratic_model(int dim);  // f_i(x) = x_i^2
DifferentiableModel cubic_model();             // scalar f(x) = x^3
DifferentiableModel constant_model(std::vector<double> value, int input_dim);
/// 3 -> 8 (tanh) -> 2 network with fixed weights drawn from `seed`.
DifferentiableModel mlp_tiny_model(std::uint64_t seed = 7);
/// Looks up "linear", "quadratic", "cubic" or "mlp-tiny"; throws ArgumentError otherwise.
DifferentiableModel builtin_model(std::string_view name, SeededRng& rng);
const std::vector<std::string>& builtin_model_names();

/// n points with x ~ U(-1, 1)^d and y = f(x) + target_noise * N(0, I).
std::vector<TheoremSample> make_theorem_dataset(const DifferentiableModel& model, std::size_t n, double target_noise,
                                                SeededRng& rng);

}  // namespace vdegrade
