#pragma once

#include <cstdint>

namespace gcp {

/// Counter-based generator "smix64-ctr v1": output i of stream s under seed k
/// is splitmix64(hash(k, s) + i * GAMMA). Outputs depend only on
/// (seed, stream, counter), so sequences are reproducible across platforms
/// and streams can be split deterministically.
class CounterRng {
 public:
  static constexpr const char* kAlgorithm = "smix64-ctr";
  static constexpr int kVersion = 1;

  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0);

  /// Deterministic child stream; independent of draws made so far.
  CounterRng split(std::uint64_t substream) const;

  std::uint64_t next_u64();
  /// Uniform on [0, 1), 53-bit resolution.
  double uniform();
  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);
  /// Integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  /// Standard normal via Box-Muller (pairs of counter draws).
  double normal();
  double normal(double mean, double stddev);

 private:
  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace gcp
