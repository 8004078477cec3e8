#ifndef NEGDEP_PRUNING_HPP
#define NEGDEP_PRUNING_HPP

#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/kernel.hpp"
#include "negdep/random.hpp"
#include "negdep/sampler.hpp"

namespace negdep {

/// Two-layer network phi(x) = sum_i v_i g(w_i^T x / sqrt(N)) with g(x) = erf(x / sqrt 2).
struct TwoLayerNet {
  MatrixXd w;  // rows are first-layer weights
  VectorXd v;

  Index units() const { return w.rows(); }
  Index input_dim() const { return w.cols(); }
  double eval(const VectorXd& x) const;
};

double erf_activation(double x);

/// Scaled Gram matrices Q = W W^T / N, R = W W*^T / N, T = W* W*^T / N.
struct MacroParams {
  MatrixXd Q;
  MatrixXd R;
  MatrixXd T;

  Index students() const { return Q.rows(); }
  Index teachers() const { return T.rows(); }
  void check() const;
};

MacroParams macro_from_nets(const TwoLayerNet& student, const TwoLayerNet& teacher);

/// Partition of the K student units into M teacher groups.
struct GroupPartition {
  std::vector<int> group_of;  // unit -> group

  Index units() const { return static_cast<Index>(group_of.size()); }
  int groups() const;
  std::vector<std::vector<Index>> members() const;
  /// Sizes "2,1,3" -> units 0,1 in group 0, unit 2 in group 1, ...
  static GroupPartition from_sizes(const std::vector<int>& sizes);
  static GroupPartition parse(const std::string& sizes);
};

/// (1/pi) arcsin(q_ab / (sqrt(1 + q_aa) sqrt(1 + q_bb))).
double i2(double q_ab, double q_aa, double q_bb);

double generalization_error(const VectorXd& v, const VectorXd& v_star, const MacroParams& macro);

/// Monte Carlo estimate of (1/2) E[(phi(X) - phi*(X))^2] over standard Gaussian inputs.
struct McEstimate {
  double mean = 0.0;
  double stderr_ = 0.0;
};
McEstimate generalization_error_mc(const TwoLayerNet& student, const TwoLayerNet& teacher,
                                   Index samples, Rng& rng);

struct VDynamicsOptions {
  double eta = 1.0;
  Index max_steps = 1000000;
  double tol = 1e-10;   // stop when |dv/dt| < tol
  Index record_every = 0;  // 0 keeps only the endpoints
};

struct VTrajectory {
  std::vector<VectorXd> path;  // v0, recorded states, final state
  VectorXd final_v;
  Index steps = 0;
  bool converged = false;
};

/// eta [sum_m v*_m I2(i, m) - sum_j v_j I2(i, j)].
VectorXd v_drift(const VectorXd& v, const VectorXd& v_star, const MacroParams& macro, double eta);

/// Explicit Euler with dt = 0.01 / eta. Throws NumericalError once |v| > 1e6.
VTrajectory v_dynamics(const VectorXd& v0, const VectorXd& v_star, const MacroParams& macro,
                       const VDynamicsOptions& opt = {});

/// Perfect-reconstruction fixed point: each student weight equals its teacher's,
/// teachers orthonormal (T = I), v split randomly inside each group so group sums match v*.
struct GroupedConfig {
  GroupPartition groups;
  TwoLayerNet teacher;
  TwoLayerNet student;
  MacroParams macro;
};
GroupedConfig make_grouped_config(const GroupPartition& groups, const VectorXd& v_star, Index N,
                                  Rng& rng);

/// Macro parameters of the grouped configuration without materializing weights.
MacroParams grouped_macro(const GroupPartition& groups);

enum class TheoryKernel { Gram, Gaussian };

/// L = Q, or L_ij = exp(-2 beta (1 - Q_ij)) = exp(-beta |w_i - w_j|^2 / N) for unit-norm rows.
MatrixXd theory_kernel(const MatrixXd& Q, TheoryKernel kind, double beta);

/// k-DPP draw with the Gaussian kernel over the rows of `features`.
std::vector<Index> divnet_prune(const MatrixXd& features, double beta, double ridge, Index k,
                                Rng& rng);

/// Exact k-DPP law of L. Subsets whose submatrix has two identical columns get mass 0 exactly.
SubsetDistribution kdpp_law(const MatrixXd& L, Index k);

/// Group-sum reweighting: the weight of pruned units in G_m is spread evenly over
/// the l_m retained ones, so retained sums equal sum_{G_m} v_i.
VectorXd reweight_groups(const std::vector<Index>& S, const GroupPartition& groups,
                         const VectorXd& v);

struct LeastSquaresReweight {
  VectorXd v_tilde;  // indexed like S
  bool rank_deficient = false;
  Index rank = 0;
};

/// argmin |A v - A_S v~| over the retained columns of the activation matrix
/// (rows are inputs, columns are units). Minimum-norm when rank deficient.
LeastSquaresReweight reweight_least_squares(const std::vector<Index>& S, const MatrixXd& activations,
                                            const VectorXd& v);

/// Pruned network error from the general formula: sub-macro on S, reweighted v~.
double pruned_error(const std::vector<Index>& S, const VectorXd& v_tilde, const VectorXd& v_star,
                    const MacroParams& macro);

/// (1/6) sum over unexplained groups of (v*_m)^2.
double pruned_error_grouped(std::uint64_t mask, const GroupPartition& groups, const VectorXd& v_star);

/// E[(1/6) sum_{m not explained} (v*_m)^2] under an exact subset law.
double expected_pruned_error(const SubsetDistribution& law, const GroupPartition& groups,
                             const VectorXd& v_star);

/// P(m not explained) for each group.
VectorXd unexplained_probabilities(const SubsetDistribution& law, const GroupPartition& groups);

/// Independent Bernoulli(p_i) law.
SubsetDistribution bernoulli_law(const VectorXd& p);

/// Bernoulli law conditioned on |S| = k, with weights fitted so the marginals equal p
/// (sum p = k). Throws NumericalError when the fit misses by more than 1e-9.
SubsetDistribution conditional_poisson_law(const VectorXd& p, Index k);

/// Max |marginal difference|; throws std::invalid_argument above tol.
double check_matched_marginals(const SubsetDistribution& a, const SubsetDistribution& b,
                               double tol = 1e-9);

struct PruneComparison {
  double e_dpp = 0.0;
  double e_bernoulli = 0.0;
  double e_conditional_poisson = 0.0;
  VectorXd marginals;
};

/// DPP law from the theory kernel on the grouped macro, compared with matched alternatives.
PruneComparison compare_pruning(const GroupPartition& groups, const VectorXd& v_star, Index k,
                                TheoryKernel kind = TheoryKernel::Gram, double beta = 1.0);

}  // namespace negdep

#endif
