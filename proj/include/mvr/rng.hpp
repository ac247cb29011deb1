#pragma once

#include <cstdint>

namespace mvr {

/// Deterministic xoshiro256** generator. The standard distributions are
/// implementation-defined, so uniform/normal are generated by hand to keep
/// dataset bytes reproducible across toolchains.
class Rng {
 public:
  explicit Rng(uint64_t seed);

  uint64_t next_u64();
  /// Uniform in [0, 1).
  double uniform();
  double uniform(double lo, double hi);
  /// Standard normal via Box-Muller (polar form, no cached spare).
  double normal();
  double normal(double mu, double sigma);
  /// Uniform integer in [0, n).
  int next_int(int n);

  /// Independent child stream; `stream` tags the purpose.
  Rng fork(uint64_t stream) const;

 private:
  uint64_t s_[4];
  uint64_t seed_;
};

}  // namespace mvr
