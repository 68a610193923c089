#include "vdegrade/rng.hpp"

#include <cmath>
#include <numbers>
#include <string>

#include "vdegrade/error.hpp"

namespace vdegrade {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
constexpr double kMaxPoissonLambda = 1e7;

std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

// log(k!) via table for small k and Stirling series otherwise (same series
// as numpy's random_loggam). Used by PTRS; std::lgamma writes the global
// signgam and is therefore not safe to call concurrently.
double log_factorial(std::int64_t k) {
  static constexpr double kCoeffs[] = {8.333333333333333e-02, -2.777777777777778e-03,
                                       7.936507936507937e-04, -5.952380952380952e-04,
                                       8.417508417508418e-04, -1.917526917526918e-03,
                                       6.410256410256410e-03, -2.955065359477124e-02,
                                       1.796443723688307e-01, -1.39243221690590e+00};
  if (k <= 1) return 0.0;
  double x = static_cast<double>(k) + 1.0;  // log(k!) = loggam(k + 1)
  std::int64_t shift = 0;
  if (x <= 7.0) {
    shift = static_cast<std::int64_t>(7 - static_cast<std::int64_t>(x));
  }
  double x0 = x + static_cast<double>(shift);
  double x2 = 1.0 / (x0 * x0);
  double series = kCoeffs[9];
  for (int i = 8; i >= 0; --i) series = series * x2 + kCoeffs[i];
  double gl = series / x0 + 0.5 * std::log(2.0 * std::numbers::pi) + (x0 - 0.5) * std::log(x0) - x0;
  if (x <= 7.0) {
    for (std::int64_t i = 1; i <= shift; ++i) {
      x0 -= 1.0;
      gl -= std::log(x0);
    }
  }
  return gl;
}

}  // namespace

std::uint64_t mix64(std::uint64_t x) noexcept {
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id) {
  std::uint64_t key = mix64(seed) ^ mix64(stream_id ^ 0xD1B54A32D192ED03ULL);
  for (auto& word : state_) {
    key += kGolden;
    word = mix64(key);
  }
}

SeededRng SeededRng::substream(std::uint64_t label) const {
  return SeededRng(seed_, mix64((stream_id_ * kGolden) ^ mix64(label)));
}

std::uint64_t SeededRng::next_u64() noexcept {
  const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
  const std::uint64_t t = state_[1] << 17;
  state_[2] ^= state_[0];
  state_[3] ^= state_[1];
  state_[1] ^= state_[2];
  state_[0] ^= state_[3];
  state_[2] ^= t;
  state_[3] = rotl(state_[3], 45);
  return result;
}

double SeededRng::uniform01() noexcept {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform01(); }

std::int64_t SeededRng::uniform_int(std::int64_t lo, std::int64_t hi) {
  if (hi < lo) throw ArgumentError("uniform_int: empty range");
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  if (span == 0) return static_cast<std::int64_t>(next_u64());  // full 64-bit range
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % span);
  std::uint64_t draw;
  do {
    draw = next_u64();
  } while (draw >= limit);
  return lo + static_cast<std::int64_t>(draw % span);
}

double SeededRng::normal() noexcept {
  if (has_cached_normal_) {
    has_cached_normal_ = false;
    return cached_normal_;
  }
  const double u1 = 1.0 - uniform01();  // (0, 1]
  const double u2 = uniform01();
  const double radius = std::sqrt(-2.0 * std::log(u1));
  const double angle = 2.0 * std::numbers::pi * u2;
  cached_normal_ = radius * std::sin(angle);
  has_cached_normal_ = true;
  return radius * std::cos(angle);
}

std::int64_t SeededRng::poisson(double lambda) {
  if (!(lambda >= 0.0) || lambda > kMaxPoissonLambda) {
    throw ArgumentError("poisson: lambda must be in [0, 1e7], got " + std::to_string(lambda));
  }
  if (lambda == 0.0) return 0;
  if (lambda < 30.0) {
    double p = std::exp(-lambda);
    double cdf = p;
    const double u = uniform01();
    std::int64_t k = 0;
    while (u > cdf) {
      ++k;
      p *= lambda / static_cast<double>(k);
      cdf += p;
      if (p <= 0.0 && cdf < u) break;  // tail exhausted in floating point
    }
    return k;
  }
  const double slam = std::sqrt(lambda);
  const double loglam = std::log(lambda);
  const double b = 0.931 + 2.53 * slam;
  const double a = -0.059 + 0.02483 * b;
  const double inv_alpha = 1.1239 + 1.1328 / (b - 3.4);
  const double vr = 0.9277 - 3.6224 / (b - 2.0);
  for (;;) {
    const double u = uniform01() - 0.5;
    const double v = uniform01();
    const double us = 0.5 - std::fabs(u);
    const auto k = static_cast<std::int64_t>(std::floor((2.0 * a / us + b) * u + lambda + 0.43));
    if (us >= 0.07 && v <= vr) return k;
    if (k < 0 || (us < 0.013 && v > us)) continue;
    if (std::log(v) + std::log(inv_alpha) - std::log(a / (us * us) + b) <=
        -lambda + static_cast<double>(k) * loglam - log_factorial(k)) {
      return k;
    }
  }
}

std::size_t SeededRng::categorical(std::span<const double> weights) {
  double total = 0.0;
  for (double w : weights) {
    if (!(w >= 0.0) || !std::isfinite(w)) throw ArgumentError("categorical: weights must be finite and >= 0");
    total += w;
  }
  if (!(total > 0.0)) throw ArgumentError("categorical: weights sum to zero");
  const double target = uniform01() * total;
  double acc = 0.0;
  std::size_t last_positive = 0;
  for (std::size_t i = 0; i < weights.size(); ++i) {
    if (weights[i] <= 0.0) continue;
    last_positive = i;
    acc += weights[i];
    if (target < acc) return i;
  }
  return last_positive;
}

std::vector<std::size_t> SeededRng::permutation(std::size_t n) {
  std::vector<std::size_t> order(n);
  for (std::size_t i = 0; i < n; ++i) order[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const auto j = static_cast<std::size_t>(uniform_int(0, static_cast<std::int64_t>(i - 1)));
    std::swap(order[i - 1], order[j]);
  }
  return order;
}

}  // namespace vdegrade
