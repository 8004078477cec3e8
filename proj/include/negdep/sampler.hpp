#ifndef NEGDEP_SAMPLER_HPP
#define NEGDEP_SAMPLER_HPP

#include <cstdint>
#include <functional>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/kernel.hpp"
#include "negdep/point_pattern.hpp"
#include "negdep/random.hpp"

namespace negdep {

struct DppSample {
  std::vector<Index> items;  // strictly increasing
  std::uint64_t seed = 0;
};

/// Exact law over all subsets of {0..n-1}, indexed by bitmask.
class SubsetDistribution {
 public:
  SubsetDistribution() = default;
  SubsetDistribution(int n, std::vector<double> probs);

  int items() const { return n_; }
  const std::vector<double>& probabilities() const { return p_; }
  double operator[](std::uint64_t mask) const { return p_[mask]; }
  /// Law conditioned on |S| = k.
  SubsetDistribution conditioned_on_size(int k) const;
  /// P(i in S) for every item.
  VectorXd marginals() const;
  /// Law of |S|.
  std::vector<double> cardinality() const;

 private:
  int n_ = 0;
  std::vector<double> p_;
};

std::uint64_t to_mask(const std::vector<Index>& items);
std::vector<Index> from_mask(std::uint64_t mask);

/// Projection DPP chain rule. Columns of `u` must be orthonormal; the
/// kernel is K = U U^H and exactly u.cols() items are returned, sorted.
std::vector<Index> sample_projection_features(const MatrixXd& u, Rng& rng);
std::vector<Index> sample_projection_features(const MatrixXc& u, Rng& rng);

DppSample sample_projection(const KernelMatrix& k, Rng& rng);
/// Likelihood kernels keep eigenvector j with probability lambda/(1+lambda);
/// marginal kernels with probability lambda (mixture of projections).
DppSample sample_spectral(const KernelMatrix& l, Rng& rng);
DppSample sample_kdpp(const KernelMatrix& l, Index k, Rng& rng);

/// e_0..e_kmax of the given values.
VectorXd elementary_symmetric(const VectorXd& lambda, Index kmax);
/// Eigen-index selection for a k-DPP with spectrum lambda.
std::vector<Index> select_kdpp_eigenvectors(const VectorXd& lambda, Index k, Rng& rng);

/// Eigenvalues above this fraction of the largest count towards the rank.
Index numerical_rank(const VectorXd& lambda, double rel_tol = 1e-10);

SubsetDistribution brute_force_distribution(const KernelMatrix& kern);

struct RepulsionRow {
  double eps = 0.0;
  double p_model = 0.0;
  double p_poisson = 0.0;
  double se_model = 0.0;
  double se_poisson = 0.0;
};

using PatternGenerator = std::function<PointPattern(Rng&)>;

/// P(at least two points in an eps-ball) for a stationary model and for a
/// Poisson process of the same intensity in the same window.
std::vector<RepulsionRow> repulsion_probe(const PatternGenerator& model, double intensity,
                                          const std::vector<double>& eps, const Window& window,
                                          int replicates, Rng& rng);

/// Kernel flavour: a discrete DPP on `locations` (rows) inside `window`,
/// each selected location jittered uniformly in its cell of side `cell`.
std::vector<RepulsionRow> repulsion_probe(const KernelMatrix& kern, const MatrixXd& locations,
                                          double cell, const std::vector<double>& eps,
                                          const Window& window, int replicates, Rng& rng);

}  // namespace negdep

#endif
