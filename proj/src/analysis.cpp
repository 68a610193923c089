#include "vdegrade/analysis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <memory>
#include <mutex>
#include <thread>

#include "vdegrade/error.hpp"
#include "vdegrade/metrics.hpp"

namespace vdegrade {

namespace {

// Running mean and variance (Welford).
struct Moments {
  std::size_t n = 0;
  double mean = 0.0;
  double m2 = 0.0;
  void add(double v) {
    ++n;
    const double d = v - mean;
    mean += d / static_cast<double>(n);
    m2 += d * (v - mean);
  }
  double sample_variance() const { return n > 1 ? m2 / static_cast<double>(n - 1) : 0.0; }
};

double quantile_sorted(const std::vector<double>& v, double q) {
  const double pos = q * static_cast<double>(v.size() - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const auto hi = std::min(lo + 1, v.size() - 1);
  return v[lo] + (pos - static_cast<double>(lo)) * (v[hi] - v[lo]);
}

Clip downscale(const Clip& clip, double scale, ResampleMode mode) {
  const int h = std::max(1, static_cast<int>(std::lround(clip.height() * scale)));
  const int w = std::max(1, static_cast<int>(std::lround(clip.width() * scale)));
  std::vector<Frame> frames;
  frames.reserve(clip.length());
  for (const auto& f : clip.frames()) frames.push_back(resize(f, h, w, mode));
  return Clip(std::move(frames), clip.frame_rate_hint());
}

double clip_residual_std(const Clip& degraded, const Clip& clean) {
  ResidualStats total;
  bool first = true;
  for (std::size_t i = 0; i < clean.length(); ++i) {
    const ResidualStats s = stats(residual(degraded[i], clean[i]));
    total = first ? s : merge(total, s);
    first = false;
  }
  return total.std;
}

template <typename F>
void parallel_for(std::size_t n, int jobs, F&& body) {
  const std::size_t workers = std::clamp<std::size_t>(jobs < 1 ? 1 : static_cast<std::size_t>(jobs), 1, n);
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        body(i);
      } catch (...) {
        std::lock_guard lock(failure_mutex);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < workers; ++w) pool.emplace_back(worker);
  }
  if (failure) std::rethrow_exception(failure);
}

double relative_error(double analytic, double numeric) {
  return std::abs(analytic - numeric) / std::max(1.0, std::abs(analytic));
}

void require_dims(const DifferentiableModel& m) {
  if (m.input_dim < 1 || m.output_dim < 1 || !m.eval) throw ModelError("model '" + m.name + "' is incomplete");
}

// Full Hessian of each output, k x d x d, by central differences of the
// Jacobian. Only its off-diagonal entries are used (as control variates,
// where any fixed matrix keeps the estimator unbiased).
std::vector<double> fd_hessian_full(const DifferentiableModel& model, const std::vector<double>& x, double step) {
  const int d = model.input_dim;
  const int k = model.output_dim;
  std::vector<double> h(static_cast<std::size_t>(k * d * d), 0.0);
  std::vector<double> xp = x;
  for (int j = 0; j < d; ++j) {
    xp[j] = x[j] + step;
    const auto jp = model.jacobian(xp);
    xp[j] = x[j] - step;
    const auto jm = model.jacobian(xp);
    xp[j] = x[j];
    for (int m = 0; m < k; ++m) {
      for (int i = 0; i < d; ++i) {
        const std::size_t idx = static_cast<std::size_t>(m * d + i);
        h[static_cast<std::size_t>((m * d + i) * d + j)] = (jp[idx] - jm[idx]) / (2.0 * step);
      }
    }
  }
  return h;
}

}  // namespace

DownscaleReport downscale_noise_report(const Clip& clean, const Clip& noisy, std::vector<double> scales,
                                       ResampleMode mode) {
  if (!clean.same_shape(noisy)) throw ShapeError("downscale_noise_report: clean and noisy clips are misaligned");
  if (scales.empty()) throw ArgumentError("downscale_noise_report: no scales given");
  for (double s : scales) {
    if (!(s > 0.0) || !std::isfinite(s)) throw ArgumentError("downscale_noise_report: scales must be positive");
  }
  std::sort(scales.begin(), scales.end(), std::greater<>());
  if (std::adjacent_find(scales.begin(), scales.end()) != scales.end()) {
    throw ArgumentError("downscale_noise_report: scales must be distinct");
  }
  DownscaleReport report;
  for (double s : scales) {
    const double p = s == 1.0 ? psnr(noisy, clean) : psnr(downscale(noisy, s, mode), downscale(clean, s, mode));
    report.rows.push_back({s, mode, p});
  }
  return report;
}

Dispersion dispersion(const std::vector<double>& values) {
  if (values.empty()) throw ArgumentError("dispersion of an empty list");
  Dispersion d;
  double sum = 0.0;
  for (double v : values) sum += v;
  d.mean = sum / static_cast<double>(values.size());
  double ss = 0.0;
  for (double v : values) ss += (v - d.mean) * (v - d.mean);
  d.std = std::sqrt(ss / static_cast<double>(values.size()));
  std::vector<double> sorted = values;
  std::sort(sorted.begin(), sorted.end());
  d.iqr = quantile_sorted(sorted, 0.75) - quantile_sorted(sorted, 0.25);
  return d;
}

VarianceReport shuffle_variance_report(const Clip& clean, const PipelineConfig& config, int n_pipelines, int jobs) {
  if (n_pipelines < 2) throw ArgumentError("shuffle_variance_report needs at least 2 pipelines");
  PipelineConfig shuffled_config = config;
  shuffled_config.shuffle = true;
  shuffled_config.validate();
  const auto n = static_cast<std::size_t>(n_pipelines);
  VarianceReport report;
  report.shuffled_stds.assign(n, 0.0);
  report.fixed_stds.assign(n, 0.0);
  const ApplyOptions options{config.clamp_each_stage, config.codec.video_codecs};
  parallel_for(n, jobs, [&](std::size_t i) {
    SeededRng plan_rng = plan_rng_for_clip(config.seed, i);
    const PipelinePlan plan = sample_plan(shuffled_config, plan_rng, clean.length());
    const SeededRng apply_rng = apply_rng_for_clip(config.seed, i);
    report.shuffled_stds[i] = clip_residual_std(apply_plan(clean, plan, apply_rng, options), clean);
    report.fixed_stds[i] = clip_residual_std(apply_plan(clean, plan.with_canonical_order(), apply_rng, options), clean);
  });
  report.shuffled = dispersion(report.shuffled_stds);
  report.fixed = dispersion(report.fixed_stds);
  return report;
}

std::vector<double> fd_jacobian(const DifferentiableModel& model, const std::vector<double>& x, double step) {
  require_dims(model);
  const int d = model.input_dim;
  const int k = model.output_dim;
  std::vector<double> jac(static_cast<std::size_t>(k * d));
  std::vector<double> xp = x;
  for (int i = 0; i < d; ++i) {
    xp[i] = x[i] + step;
    const auto fp = model.eval(xp);
    xp[i] = x[i] - step;
    const auto fm = model.eval(xp);
    xp[i] = x[i];
    for (int m = 0; m < k; ++m) jac[static_cast<std::size_t>(m * d + i)] = (fp[m] - fm[m]) / (2.0 * step);
  }
  return jac;
}

std::vector<double> fd_hessian_diag(const DifferentiableModel& model, const std::vector<double>& x, double step) {
  require_dims(model);
  const int d = model.input_dim;
  const int k = model.output_dim;
  std::vector<double> hd(static_cast<std::size_t>(k * d));
  const auto f0 = model.eval(x);
  std::vector<double> xp = x;
  for (int i = 0; i < d; ++i) {
    xp[i] = x[i] + step;
    const auto fp = model.eval(xp);
    xp[i] = x[i] - step;
    const auto fm = model.eval(xp);
    xp[i] = x[i];
    for (int m = 0; m < k; ++m) hd[static_cast<std::size_t>(m * d + i)] = (fp[m] - 2.0 * f0[m] + fm[m]) / (step * step);
  }
  return hd;
}

DifferentiableModel with_finite_differences(DifferentiableModel model, double step) {
  require_dims(model);
  auto base = std::make_shared<DifferentiableModel>(model);
  if (!model.jacobian) model.jacobian = [base, step](const std::vector<double>& x) { return fd_jacobian(*base, x, step); };
  if (!model.hessian_diag) {
    model.hessian_diag = [base, step](const std::vector<double>& x) { return fd_hessian_diag(*base, x, step); };
  }
  return model;
}

DerivativeCheck finite_difference_check(const DifferentiableModel& model, const std::vector<double>& x, double step) {
  if (!(step > 0.0)) throw ArgumentError("finite_difference_check: step must be positive");
  require_dims(model);
  if (x.size() != static_cast<std::size_t>(model.input_dim)) throw ShapeError("finite_difference_check: wrong input size");
  DerivativeCheck out;
  if (model.jacobian) {
    const auto a = model.jacobian(x);
    const auto n = fd_jacobian(model, x, step);
    for (std::size_t i = 0; i < n.size(); ++i) out.jacobian_error = std::max(out.jacobian_error, relative_error(a[i], n[i]));
  }
  if (model.hessian_diag) {
    const auto a = model.hessian_diag(x);
    const auto n = fd_hessian_diag(model, x, step);
    for (std::size_t i = 0; i < n.size(); ++i) out.hessian_error = std::max(out.hessian_error, relative_error(a[i], n[i]));
  }
  return out;
}

std::string_view to_string(TheoremEstimator e) noexcept {
  return e == TheoremEstimator::kPlain ? "plain" : "control_variate";
}

TheoremEstimator theorem_estimator_from_string(std::string_view name) {
  if (name == "plain") return TheoremEstimator::kPlain;
  if (name == "control_variate") return TheoremEstimator::kControlVariate;
  throw ArgumentError("unknown estimator '" + std::string(name) + "'");
}

TheoremResult verify_theorem(const DifferentiableModel& raw_model, const std::vector<TheoremSample>& dataset,
                             double eta, std::size_t n_mc, SeededRng& rng, const TheoremOptions& options) {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw ArgumentError("verify_theorem: eta must be positive");
  if (n_mc < 1000) throw ArgumentError("verify_theorem: n_mc must be at least 1000");
  if (dataset.empty()) throw ArgumentError("verify_theorem: empty dataset");
  const DifferentiableModel model = with_finite_differences(raw_model);
  const int d = model.input_dim;
  const int k = model.output_dim;
  const auto ud = static_cast<std::size_t>(d);
  const auto uk = static_cast<std::size_t>(k);
  const double eta2 = eta * eta;

  struct Point {
    std::vector<double> x, y, r, jac, hdiag, hfull;
    double jac_norm2 = 0.0;
  };
  std::vector<Point> points;
  points.reserve(dataset.size());
  TheoremResult result;
  double rhs = 0.0;
  for (const auto& s : dataset) {
    if (s.x.size() != ud || s.y.size() != uk) throw ShapeError("verify_theorem: sample does not match model dimensions");
    const DerivativeCheck check = finite_difference_check(model, s.x);
    if (check.max_error() > kDerivativeTolerance) {
      throw ModelError("model '" + model.name + "' derivative maps disagree with finite differences (error " +
                       std::to_string(check.max_error()) + ")");
    }
    Point p;
    p.x = s.x;
    p.y = s.y;
    const auto f = model.eval(s.x);
    p.r.resize(uk);
    for (std::size_t m = 0; m < uk; ++m) p.r[m] = f[m] - s.y[m];
    p.jac = model.jacobian(s.x);
    p.hdiag = model.hessian_diag(s.x);
    if (options.estimator == TheoremEstimator::kControlVariate) p.hfull = fd_hessian_full(model, s.x, kFiniteDifferenceStep);
    double loss = 0.0;
    double curvature = 0.0;
    for (std::size_t m = 0; m < uk; ++m) {
      loss += p.r[m] * p.r[m];
      for (std::size_t i = 0; i < ud; ++i) curvature += p.r[m] * p.hdiag[m * ud + i];
    }
    for (double v : p.jac) p.jac_norm2 += v * v;
    result.clean_loss += loss;
    rhs += loss + eta2 * (p.jac_norm2 + options.curvature_weight * curvature);
    points.push_back(std::move(p));
  }
  const double inv_n = 1.0 / static_cast<double>(points.size());
  result.clean_loss *= inv_n;
  result.rhs = rhs * inv_n;

  const std::size_t pairs = (n_mc + 1) / 2;
  Moments moments;
  std::vector<double> z(ud), xp(ud), xm(ud), jz(uk);
  for (std::size_t it = 0; it < pairs; ++it) {
    double value = 0.0;
    for (const Point& p : points) {
      for (std::size_t i = 0; i < ud; ++i) {
        z[i] = eta * rng.normal();
        xp[i] = p.x[i] + z[i];
        xm[i] = p.x[i] - z[i];
      }
      const auto fp = model.eval(xp);
      const auto fm = model.eval(xm);
      double lp = 0.0;
      double lm = 0.0;
      for (std::size_t m = 0; m < uk; ++m) {
        lp += (fp[m] - p.y[m]) * (fp[m] - p.y[m]);
        lm += (fm[m] - p.y[m]) * (fm[m] - p.y[m]);
      }
      double pair_value = 0.5 * (lp + lm);
      if (options.estimator == TheoremEstimator::kControlVariate) {
        // Even part of the second-order Taylor expansion of the loss, minus its mean.
        double cv = -eta2 * p.jac_norm2;
        for (std::size_t m = 0; m < uk; ++m) {
          double acc = 0.0;
          for (std::size_t i = 0; i < ud; ++i) acc += p.jac[m * ud + i] * z[i];
          cv += acc * acc;
          double quad = 0.0;
          for (std::size_t i = 0; i < ud; ++i) {
            quad += p.hdiag[m * ud + i] * (z[i] * z[i] - eta2);
            for (std::size_t j = 0; j < ud; ++j) {
              if (j != i) quad += p.hfull[(m * ud + i) * ud + j] * z[i] * z[j];
            }
          }
          cv += p.r[m] * quad;
        }
        pair_value -= cv;
      }
      value += pair_value;
    }
    moments.add(value * inv_n);
  }
  result.lhs = moments.mean;
  result.standard_error = std::sqrt(moments.sample_variance() / static_cast<double>(pairs));
  result.gap = std::abs(result.lhs - result.rhs);
  result.n_mc = 2 * pairs;
  return result;
}

double log_log_slope(const std::vector<double>& etas, const std::vector<double>& gaps) {
  if (etas.size() != gaps.size() || etas.size() < 2) throw ArgumentError("log_log_slope needs matching lists of length >= 2");
  double mx = 0.0, my = 0.0;
  const double n = static_cast<double>(etas.size());
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(etas[i] > 0.0) || !(gaps[i] > 0.0)) return std::numeric_limits<double>::quiet_NaN();
    mx += std::log(etas[i]) / n;
    my += std::log(gaps[i]) / n;
  }
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    const double dx = std::log(etas[i]) - mx;
    sxy += dx * (std::log(gaps[i]) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

DifferentiableModel linear_model(std::vector<double> weights, int input_dim, int output_dim) {
  if (weights.size() != static_cast<std::size_t>(input_dim * output_dim)) throw ShapeError("linear_model: weight size mismatch");
  DifferentiableModel m;
  m.name = "linear";
  m.input_dim = input_dim;
  m.output_dim = output_dim;
  auto w = std::make_shared<const std::vector<double>>(std::move(weights));
  m.eval = [w, input_dim, output_dim](const std::vector<double>& x) {
    std::vector<double> f(static_cast<std::size_t>(output_dim), 0.0);
    for (int r = 0; r < output_dim; ++r) {
      for (int c = 0; c < input_dim; ++c) f[r] += (*w)[static_cast<std::size_t>(r * input_dim + c)] * x[c];
    }
    return f;
  };
  m.jacobian = [w](const std::vector<double>&) { return *w; };
  m.hessian_diag = [w](const std::vector<double>&) { return std::vector<double>(w->size(), 0.0); };
  return m;
}

DifferentiableModel random_linear_model(int input_dim, int output_dim, SeededRng& rng) {
  std::vector<double> w(static_cast<std::size_t>(input_dim * output_dim));
  for (double& v : w) v = rng.normal();
  return linear_model(std::move(w), input_dim, output_dim);
}

DifferentiableModel quadratic_model(int dim) {
  DifferentiableModel m;
  m.name = "quadratic";
  m.input_dim = dim;
  m.output_dim = dim;
  m.eval = [](const std::vector<double>& x) {
    std::vector<double> f(x.size());
    for (std::size_t i = 0; i < x.size(); ++i) f[i] = x[i] * x[i];
    return f;
  };
  m.jacobian = [dim](const std::vector<double>& x) {
    std::vector<double> j(static_cast<std::size_t>(dim * dim), 0.0);
    for (int i = 0; i < dim; ++i) j[static_cast<std::size_t>(i * dim + i)] = 2.0 * x[i];
    return j;
  };
  m.hessian_diag = [dim](const std::vector<double>&) {
    std::vector<double> h(static_cast<std::size_t>(dim * dim), 0.0);
    for (int i = 0; i < dim; ++i) h[static_cast<std::size_t>(i * dim + i)] = 2.0;
    return h;
  };
  return m;
}

DifferentiableModel cubic_model() {
  DifferentiableModel m;
  m.name = "cubic";
  m.input_dim = 1;
  m.output_dim = 1;
  m.eval = [](const std::vector<double>& x) { return std::vector<double>{x[0] * x[0] * x[0]}; };
  m.jacobian = [](const std::vector<double>& x) { return std::vector<double>{3.0 * x[0] * x[0]}; };
  m.hessian_diag = [](const std::vector<double>& x) { return std::vector<double>{6.0 * x[0]}; };
  return m;
}

DifferentiableModel constant_model(std::vector<double> value, int input_dim) {
  DifferentiableModel m;
  m.name = "constant";
  m.input_dim = input_dim;
  m.output_dim = static_cast<int>(value.size());
  const std::size_t n = value.size() * static_cast<std::size_t>(input_dim);
  m.eval = [value](const std::vector<double>&) { return value; };
  m.jacobian = [n](const std::vector<double>&) { return std::vector<double>(n, 0.0); };
  m.hessian_diag = [n](const std::vector<double>&) { return std::vector<double>(n, 0.0); };
  return m;
}

DifferentiableModel mlp_tiny_model(std::uint64_t seed) {
  constexpr int kIn = 3, kHidden = 8, kOut = 2;
  struct Weights {
    std::array<double, kHidden * kIn> w1;
    std::array<double, kHidden> b1;
    std::array<double, kOut * kHidden> w2;
    std::array<double, kOut> b2;
  };
  auto w = std::make_shared<Weights>();
  SeededRng rng(seed, 0x6d6c70);
  for (double& v : w->w1) v = rng.normal();
  for (double& v : w->b1) v = 0.5 * rng.normal();
  for (double& v : w->w2) v = rng.normal() / std::sqrt(static_cast<double>(kHidden));
  for (double& v : w->b2) v = 0.1 * rng.normal();
  auto hidden = [w](const std::vector<double>& x) {
    std::array<double, kHidden> h{};
    for (int j = 0; j < kHidden; ++j) {
      double a = w->b1[j];
      for (int i = 0; i < kIn; ++i) a += w->w1[j * kIn + i] * x[i];
      h[j] = std::tanh(a);
    }
    return h;
  };
  DifferentiableModel m;
  m.name = "mlp-tiny";
  m.input_dim = kIn;
  m.output_dim = kOut;
  m.eval = [w, hidden](const std::vector<double>& x) {
    const auto h = hidden(x);
    std::vector<double> f(kOut);
    for (int o = 0; o < kOut; ++o) {
      f[o] = w->b2[o];
      for (int j = 0; j < kHidden; ++j) f[o] += w->w2[o * kHidden + j] * h[j];
    }
    return f;
  };
  m.jacobian = [w, hidden](const std::vector<double>& x) {
    const auto h = hidden(x);
    std::vector<double> jac(kOut * kIn, 0.0);
    for (int o = 0; o < kOut; ++o) {
      for (int j = 0; j < kHidden; ++j) {
        const double g = w->w2[o * kHidden + j] * (1.0 - h[j] * h[j]);
        for (int i = 0; i < kIn; ++i) jac[o * kIn + i] += g * w->w1[j * kIn + i];
      }
    }
    return jac;
  };
  m.hessian_diag = [w, hidden](const std::vector<double>& x) {
    const auto h = hidden(x);
    std::vector<double> hd(kOut * kIn, 0.0);
    for (int o = 0; o < kOut; ++o) {
      for (int j = 0; j < kHidden; ++j) {
        const double g = w->w2[o * kHidden + j] * (-2.0 * h[j] * (1.0 - h[j] * h[j]));
        for (int i = 0; i < kIn; ++i) hd[o * kIn + i] += g * w->w1[j * kIn + i] * w->w1[j * kIn + i];
      }
    }
    return hd;
  };
  return m;
}

const std::vector<std::string>& builtin_model_names() {
  static const std::vector<std::string> names = {"linear", "quadratic", "cubic", "mlp-tiny"};
  return names;
}

DifferentiableModel builtin_model(std::string_view name, SeededRng& rng) {
  if (name == "linear") return random_linear_model(4, 3, rng);
  if (name == "quadratic") return quadratic_model(2);
  if (name == "cubic") return cubic_model();
  if (name == "mlp-tiny") return mlp_tiny_model(rng.next_u64());
  throw ArgumentError("unknown model '" + std::string(name) + "'");
}

std::vector<TheoremSample> make_theorem_dataset(const DifferentiableModel& model, std::size_t n, double target_noise,
                                                SeededRng& rng) {
  require_dims(model);
  std::vector<TheoremSample> data(n);
  for (auto& s : data) {
    s.x.resize(static_cast<std::size_t>(model.input_dim));
    for (double& v : s.x) v = rng.uniform(-1.0, 1.0);
    s.y = model.eval(s.x);
    for (double& v : s.y) v += target_noise * rng.normal();
  }
  return data;
}

}  // namespace vdegrade
