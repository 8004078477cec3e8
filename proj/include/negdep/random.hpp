#ifndef NEGDEP_RANDOM_HPP
#define NEGDEP_RANDOM_HPP

#include <cstdint>
#include <random>

#include "negdep/common.hpp"

namespace negdep {

/// Seedable, splittable generator. Distribution transforms are implemented
/// here rather than with <random> distributions so streams are identical
/// across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0);

  std::uint64_t seed() const { return seed_; }

  /// Independent child stream. Children of the same parent with the same
  /// stream id are identical; the parent state is not advanced.
  Rng split(std::uint64_t stream) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1).
  double uniform();
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
  double normal();
  /// Circular complex Gaussian with E|z|^2 = 1.
  cplx complex_normal();
  /// Uniform integer in [0, n).
  std::uint64_t below(std::uint64_t n);
  bool bernoulli(double p) { return uniform() < p; }
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace negdep

#endif
