#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

namespace concept_bridge {

/// SplitMix64 finalizer (Steele, Lea & Flood). Bijective on 64-bit words.
std::uint64_t mix64(std::uint64_t x);

/// Seed for an independent sub-stream: mix64(seed ^ mix64(stream + golden)).
/// Used for per-epoch shuffles and per-column baselines.
std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream);

/// Counter-based generator: the i-th output is mix64(seed + (i + 1) * 0x9E3779B97F4A7C15).
/// Every sampler below is implemented on top of it so streams are identical
/// across standard libraries (std:: distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  /// Uniform integer in [0, bound) via Lemire's multiply-and-reject.
  std::uint64_t uniform_below(std::uint64_t bound);
  /// Uniform double in [0, 1) with 53 random bits.
  double uniform();
  /// Standard normal via Box-Muller; one variate per call, the pair's
  /// second value is cached.
  double normal();

 private:
  std::uint64_t state_;
  double cached_normal_ = 0.0;
  bool has_cached_ = false;
};

/// Fisher-Yates permutation of 0..n-1 drawn from Rng(seed).
/// Throws InvalidArgument when n == 0.
std::vector<std::size_t> seeded_permutation(std::size_t n, std::uint64_t seed);

}  // namespace concept_bridge
