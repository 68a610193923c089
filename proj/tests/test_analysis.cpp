#include <doctest.h>

#include <chrono>
#include <cmath>

#include "test_support.hpp"
#include "vdegrade/analysis.hpp"
#include "vdegrade/error.hpp"
#include "vdegrade/metrics.hpp"

using namespace vdegrade;
using DT = DegradationType;

namespace {

Clip noisy_copy(const Clip& clean, double sigma, std::uint64_t seed) {
  std::vector<Frame> frames;
  for (std::size_t f = 0; f < clean.length(); ++f) {
    SeededRng rng(seed, f);
    frames.push_back(add_gaussian(clean[f], {sigma}, rng));
  }
  return Clip(std::move(frames));
}

std::vector<TheoremSample> fixed_cubic_dataset() {
  SeededRng rng(31, 0);
  return make_theorem_dataset(cubic_model(), 16, 0.1, rng);
}

}  // namespace

// --- downscale ----------------------------------------------------------------

TEST_CASE("downscale report basics") {
  const Clip clean = testing::fixture_clip("astronaut", 2);
  const DownscaleReport same = downscale_noise_report(clean, clean, {1.0, 0.5});
  for (const auto& row : same.rows) CHECK(std::isinf(row.psnr_db));

  const Clip noisy = noisy_copy(clean, 20.0, 1);
  const DownscaleReport r = downscale_noise_report(clean, noisy, {0.25, 1.0, 0.5});
  REQUIRE(r.rows.size() == 3);
  CHECK(r.rows[0].scale == 1.0);
  CHECK(r.rows[1].scale == 0.5);
  CHECK(r.rows[2].scale == 0.25);
  CHECK(r.rows[0].psnr_db == psnr(noisy, clean));  // exact

  CHECK_THROWS_AS(downscale_noise_report(clean, noisy, {0.5, 0.5}), ArgumentError);
  CHECK_THROWS_AS(downscale_noise_report(clean, noisy, {0.0}), ArgumentError);
  CHECK_THROWS_AS(downscale_noise_report(clean, testing::constant_clip(10, 10, 0.5, 2), {1.0}), ShapeError);
}

TEST_CASE("downscaling removes part of the noise") {
  for (const auto& name : testing::fixture_names()) {
    const Clip clean = testing::fixture_clip(name, 2);
    const Clip noisy = noisy_copy(clean, 50.0, 2);
    const DownscaleReport r = downscale_noise_report(clean, noisy, {1.0, 0.5, 0.25});
    MESSAGE(name << ": " << r.rows[0].psnr_db << " / " << r.rows[1].psnr_db << " / " << r.rows[2].psnr_db);
    // Variance / 4 per halving of the noise, minus nothing: the clean signal
    // is downscaled identically, so the residual is pure averaged noise.
    CHECK(r.rows[1].psnr_db >= r.rows[0].psnr_db + 3.0);
    CHECK(r.rows[2].psnr_db >= r.rows[1].psnr_db);
    CHECK(r.rows[1].psnr_db - r.rows[0].psnr_db == doctest::Approx(10.0 * std::log10(4.0)).epsilon(0.03));
  }
}

// --- shuffle variance ---------------------------------------------------------

TEST_CASE("dispersion statistics") {
  const Dispersion d = dispersion({1.0, 2.0, 3.0, 4.0});
  CHECK(d.mean == 2.5);
  CHECK(d.std == doctest::Approx(std::sqrt(1.25)));
  CHECK(d.iqr == doctest::Approx(1.5));  // quartiles 1.75 and 3.25
  CHECK(dispersion({5.0}).std == 0.0);
}

TEST_CASE("single enabled type: order is irrelevant") {
  const Clip clip = testing::fixture_clip("coffee", 1);
  const PipelineConfig c = PipelineConfig::only({DT::kSpeckle});
  const VarianceReport r = shuffle_variance_report(clip, c, 12);
  REQUIRE(r.shuffled_stds.size() == 12);
  CHECK(r.shuffled_stds == r.fixed_stds);
  CHECK(r.shuffled.std == r.fixed.std);
}

TEST_CASE("zero-strength config gives zero residuals") {
  const Clip clip = testing::fixture_clip("camera", 1);
  PipelineConfig c = PipelineConfig::only({DT::kGaussian, DT::kSpeckle});
  c.noise.gaussian_sigma_255 = {0.0, 0.0};
  c.noise.speckle_level_255 = {0.0, 0.0};
  const VarianceReport r = shuffle_variance_report(clip, c, 5);
  for (double s : r.shuffled_stds) CHECK(s == 0.0);
  for (double s : r.fixed_stds) CHECK(s == 0.0);
  CHECK_THROWS_AS(shuffle_variance_report(clip, c, 1), ArgumentError);
}

TEST_CASE("commuting additive stages give equal stds in either order") {
  const Clip clip = testing::constant_clip(64, 64, 0.5);
  PipelinePlan plan;
  plan.stages.push_back({DT::kGaussian, {GaussianNoiseSpec{10.0}}});
  plan.stages.push_back({DT::kGaussian, {GaussianNoiseSpec{20.0}}});
  plan.order = {1, 0};
  const SeededRng rng(3, 3);
  const Frame a = residual(apply_plan(clip, plan, rng, {false})[0], clip[0]);
  const Frame b = residual(apply_plan(clip, plan.with_canonical_order(), rng, {false})[0], clip[0]);
  CHECK(stats(a).std == doctest::Approx(stats(b).std).epsilon(1e-12));
}

TEST_CASE("shuffle variance is independent of jobs") {
  const Clip clip = testing::fixture_clip("rocket", 1);
  PipelineConfig c = PipelineConfig::only({DT::kGaussian, DT::kJpeg, DT::kResize, DT::kSpeckle});
  c.seed = 8;
  const VarianceReport a = shuffle_variance_report(clip, c, 16, 1);
  const VarianceReport b = shuffle_variance_report(clip, c, 16, 4);
  CHECK(a.shuffled_stds == b.shuffled_stds);
  CHECK(a.fixed_stds == b.fixed_stds);
}

// --- derivatives -----------------------------------------------------------------

TEST_CASE("finite difference checks on the builtin models") {
  SeededRng rng(1, 0);
  const DifferentiableModel lin = random_linear_model(4, 3, rng);
  const DerivativeCheck lc = finite_difference_check(lin, {0.3, -0.2, 0.9, 0.1});
  CHECK(lc.jacobian_error < 1e-8);
  CHECK(lin.hessian_diag({0.3, -0.2, 0.9, 0.1}) == std::vector<double>(12, 0.0));

  const DifferentiableModel quad = quadratic_model(1);
  CHECK(fd_hessian_diag(quad, {2.0})[0] == doctest::Approx(2.0).epsilon(1e-4));
  CHECK(finite_difference_check(quad, {2.0}).max_error() < 1e-4);

  const DifferentiableModel cub = cubic_model();
  CHECK(std::fabs(fd_jacobian(cub, {1.0})[0] - 6.0 / 2.0) < 1e-4);  // f' = 3x^2 = 3
  CHECK(std::fabs(fd_hessian_diag(cub, {1.0})[0] - 6.0) < 1e-4);    // f'' = 6x
  CHECK(finite_difference_check(cub, {1.0}).max_error() < 1e-4);

  const DifferentiableModel mlp = mlp_tiny_model();
  CHECK(finite_difference_check(mlp, {0.2, -0.5, 0.7}).max_error() < 1e-4);
}

TEST_CASE("inconsistent derivatives are rejected") {
  DifferentiableModel bad = cubic_model();
  bad.jacobian = [](const std::vector<double>& x) { return std::vector<double>{2.0 * x[0] * x[0]}; };
  SeededRng rng(2, 0);
  const auto data = make_theorem_dataset(cubic_model(), 4, 0.0, rng);
  CHECK(finite_difference_check(bad, {1.0}).jacobian_error > 0.5);
  CHECK_THROWS_AS(verify_theorem(bad, data, 0.1, 1000, rng), ModelError);
  CHECK_THROWS_AS(verify_theorem(cubic_model(), data, 0.1, 10, rng), ArgumentError);
  CHECK_THROWS_AS(verify_theorem(cubic_model(), data, 0.0, 1000, rng), ArgumentError);
}

TEST_CASE("finite differences fill in missing derivative maps") {
  DifferentiableModel m = mlp_tiny_model(3);
  m.jacobian = nullptr;
  m.hessian_diag = nullptr;
  const DifferentiableModel filled = with_finite_differences(m);
  const DifferentiableModel ref = mlp_tiny_model(3);
  const std::vector<double> x = {0.1, 0.4, -0.3};
  const auto j1 = filled.jacobian(x);
  const auto j2 = ref.jacobian(x);
  for (std::size_t i = 0; i < j1.size(); ++i) CHECK(j1[i] == doctest::Approx(j2[i]).epsilon(1e-6));
}

// --- theorem --------------------------------------------------------------------

TEST_CASE("constant model: both sides equal the clean loss") {
  const DifferentiableModel m = constant_model({0.5, -1.0}, 3);
  SeededRng rng(4, 0);
  const auto data = make_theorem_dataset(random_linear_model(3, 2, rng), 8, 0.1, rng);
  const TheoremResult r = verify_theorem(m, data, 0.3, 1000, rng);
  CHECK(r.lhs == doctest::Approx(r.clean_loss).epsilon(1e-12));
  CHECK(r.rhs == doctest::Approx(r.clean_loss).epsilon(1e-12));
  CHECK(r.standard_error < 1e-12);
}

TEST_CASE("linear models satisfy the identity within Monte-Carlo error") {
  const auto start = std::chrono::steady_clock::now();
  int failures = 0;
  for (std::uint64_t k = 0; k < 20; ++k) {
    SeededRng rng(100 + k, 0);
    const DifferentiableModel m = random_linear_model(4, 3, rng);
    const auto data = make_theorem_dataset(m, 16, 0.2, rng);
    const TheoremResult r = verify_theorem(m, data, 0.1, 100000, rng);
    failures += r.gap >= 3.0 * r.standard_error;
    // Closed form: rhs = clean loss + eta^2 ||W||_F^2.
    double w2 = 0.0;
    for (double j : m.jacobian(data[0].x)) w2 += j * j;
    CHECK(r.rhs == doctest::Approx(r.clean_loss + 0.01 * w2).epsilon(1e-12));
  }
  // Each check fails with probability 0.27% under the null.
  CHECK(failures == 0);
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  MESSAGE("20 linear models in " << secs << " s");
}

TEST_CASE("quadratic model: gap matches the fourth-order oracle") {
  // f_i = x_i^2, y = f(x): lhs - rhs = sum_i E[z^4] - (second-order part)
  // = 3 eta^4 per coordinate, exactly, for any x.
  const DifferentiableModel m = quadratic_model(2);
  SeededRng rng(6, 0);
  const auto data = make_theorem_dataset(m, 8, 0.0, rng);
  TheoremOptions opt;
  opt.estimator = TheoremEstimator::kControlVariate;
  for (double eta : {0.2, 0.1}) {
    const TheoremResult r = verify_theorem(m, data, eta, 100000, rng, opt);
    const double oracle = 2.0 * 3.0 * std::pow(eta, 4);
    CHECK(r.lhs - r.rhs == doctest::Approx(oracle).epsilon(0.05));
  }
}

TEST_CASE("curvature weight one is the correct second-order coefficient") {
  // With y != f(x) the curvature term is nonzero; weight 1 leaves an O(eta^4)
  // gap while weight 1/2 leaves an O(eta^2) one.
  const DifferentiableModel m = quadratic_model(2);
  SeededRng rng(7, 0);
  auto data = make_theorem_dataset(m, 8, 0.0, rng);
  for (auto& sample : data) {
    for (double& y : sample.y) y += 0.5;  // residual f - y = -0.5 everywhere
  }
  auto slope_for = [&](double w) {
    TheoremOptions opt{TheoremEstimator::kControlVariate, w};
    std::vector<double> etas = {0.1, 0.05, 0.025}, gaps;
    for (double eta : etas) {
      SeededRng r(9, 0);
      gaps.push_back(verify_theorem(m, data, eta, 20000, r, opt).gap);
    }
    return log_log_slope(etas, gaps);
  };
  CHECK(slope_for(1.0) > 3.5);
  CHECK(slope_for(0.5) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("smooth models: gap shrinks as eta halves") {
  SeededRng mrng(1, 1);
  std::vector<DifferentiableModel> models = {cubic_model(), quadratic_model(2), mlp_tiny_model()};
  TheoremOptions opt;
  opt.estimator = TheoremEstimator::kControlVariate;
  for (const auto& m : models) {
    SeededRng drng(12, 0);
    const auto data = m.name == "cubic" ? fixed_cubic_dataset() : make_theorem_dataset(m, 16, 0.1, drng);
    std::vector<double> etas = {0.1, 0.05, 0.025}, gaps;
    for (double eta : etas) {
      SeededRng rng(13, 0);
      gaps.push_back(verify_theorem(m, data, eta, 100000, rng, opt).gap);
    }
    CHECK_MESSAGE(gaps[1] < gaps[0], m.name);
    CHECK_MESSAGE(gaps[2] < gaps[1], m.name);
    const double slope = log_log_slope(etas, gaps);
    MESSAGE(m.name << " slope " << slope);
    CHECK(slope >= 2.5);
  }
}

TEST_CASE("log-log slope and estimator names") {
  CHECK(log_log_slope({1.0, 2.0, 4.0}, {3.0, 24.0, 192.0}) == doctest::Approx(3.0));
  CHECK_THROWS_AS(log_log_slope({1.0}, {1.0}), ArgumentError);
  CHECK(theorem_estimator_from_string("control_variate") == TheoremEstimator::kControlVariate);
  CHECK(to_string(TheoremEstimator::kPlain) == "plain");
  SeededRng rng(0, 0);
  for (const auto& name : builtin_model_names()) CHECK(builtin_model(name, rng).name == name);
  CHECK_THROWS_AS(builtin_model("resnet", rng), ArgumentError);
}
