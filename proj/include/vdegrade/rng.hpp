#pragma once

#include <array>
#include <cstdint>
#include <span>
#include <vector>

namespace vdegrade {

/// Deterministic random source addressed by (seed, stream_id).
///
/// Algorithm (frozen; changing any step changes every recorded manifest):
///   - core generator: xoshiro256** (Blackman & Vigna, 2018);
///   - state: four consecutive SplitMix64 outputs starting from
///     key = mix(seed) ^ mix(stream_id ^ 0xD1B54A32D192ED03), where mix is the
///     SplitMix64 finalizer;
///   - substream(label) -> (seed, mix(stream_id * 0x9E3779B97F4A7C15 ^ mix(label)));
///   - uniform01 uses the top 53 bits of one draw;
///   - normal is Box-Muller; the sine branch is cached for the next call;
///   - poisson is CDF inversion below lambda = 30 and Hoermann's PTRS
///     transformed rejection at and above it;
///   - permutation is Fisher-Yates from the last index down, with unbiased
///     bounded integers by rejection.
///
/// Normal and Poisson draws go through libm (log, cos, sqrt), so bit-exactness
/// across platforms holds wherever those are correctly rounded (glibc on x86-64
/// and aarch64).
class SeededRng {
 public:
  SeededRng(std::uint64_t seed, std::uint64_t stream_id = 0);

  std::uint64_t seed() const noexcept { return seed_; }
  std::uint64_t stream_id() const noexcept { return stream_id_; }

  /// Independent generator for a labelled child stream. Does not advance this one.
  SeededRng substream(std::uint64_t label) const;

  std::uint64_t next_u64() noexcept;
  /// Uniform on [0, 1).
  double uniform01() noexcept;
  /// Uniform on [lo, hi); returns lo when lo == hi.
  double uniform(double lo, double hi) noexcept;
  /// Uniform integer on the closed range [lo, hi].
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);
  double normal() noexcept;
  /// Poisson variate; lambda must lie in [0, 1e7].
  std::int64_t poisson(double lambda);
  /// Index drawn with probability proportional to weights[i].
  std::size_t categorical(std::span<const double> weights);
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t seed_;
  std::uint64_t stream_id_;
  std::array<std::uint64_t, 4> state_{};
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// SplitMix64 finalizer; exposed for stream-id derivation elsewhere.
std::uint64_t mix64(std::uint64_t x) noexcept;

}  // namespace vdegrade
