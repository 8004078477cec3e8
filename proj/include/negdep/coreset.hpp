#ifndef NEGDEP_CORESET_HPP
#define NEGDEP_CORESET_HPP

#include <functional>
#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/kernel.hpp"
#include "negdep/random.hpp"

namespace negdep {

enum class FamilyKind { KMeans, LinearRegression, BandLimited, Finite };

const char* to_string(FamilyKind kind);

/// A query family F = {f_theta} over a fixed data set of N points.
///
///  - KMeans: theta holds k centres of dimension d, drawn uniformly in the
///    bounding box of the data; f(x) = min_q |x - q|^2.
///  - LinearRegression: data rows (y, z), theta = (a, b) in [-radius, radius]^(d+1);
///    f(y, z) = (<a, y> + b - z)^2.
///  - BandLimited: data is the torus grid x_i = i/N;
///    f = 1 + sum_k a_k cos(2 pi k x) + b_k sin(2 pi k x) with sum |a_k| + |b_k| <= rho < 1.
///  - Finite: explicit Q x N table of query values; theta = (query index).
class LossFamily {
 public:
  static LossFamily kmeans(MatrixXd data, int k);
  static LossFamily linear_regression(MatrixXd y, VectorXd z, double radius = 1.0);
  static LossFamily band_limited(Index n, int bandwidth, double rho = 0.9);
  static LossFamily finite(MatrixXd values);

  FamilyKind kind() const { return kind_; }
  Index size() const { return data_.rows(); }
  /// Data rows. For Finite, the column holds the item index.
  const MatrixXd& data() const { return data_; }
  int param_dim() const;
  /// True when the whole family can be listed (Finite only).
  bool enumerable() const { return kind_ == FamilyKind::Finite; }
  Index query_count() const { return table_.rows(); }

  /// f_theta at every data point.
  VectorXd evaluate(const VectorXd& theta) const;
  VectorXd sample_query(Rng& rng) const;
  /// Every query of a Finite family, otherwise `count` random ones.
  std::vector<VectorXd> probe_queries(int count, Rng& rng) const;

  /// N x m matrix with orthonormal columns spanning the family's own
  /// features: Fourier modes for BandLimited, graded monomials of the
  /// (box-normalized) data otherwise.
  MatrixXd feature_map(Index m) const;

 private:
  FamilyKind kind_ = FamilyKind::Finite;
  MatrixXd data_;
  VectorXd target_;
  MatrixXd table_;
  VectorXd lo_, hi_;
  int k_ = 0;
  int bandwidth_ = 0;
  double rho_ = 0.0;
  double radius_ = 1.0;
};

FamilyKind family_kind_from_string(const std::string& s);

double full_loss(const LossFamily& family, const VectorXd& theta);

struct SensitivityOptions {
  int probes = 10000;
  double safety = 1.5;
};

struct SensitivityBounds {
  VectorXd s;
  double total = 0.0;
};

/// Upper bounds on sup_f f(x)/L(f). Enumerable families are exact (no
/// safety factor); others use random probing times the safety factor.
SensitivityBounds sensitivity_bounds(const LossFamily& family, Rng& rng,
                                     const SensitivityOptions& opt = {});

struct WeightedSubset {
  std::vector<Index> items;  // may repeat for i.i.d. draws
  std::vector<double> weights;
};

double weighted_loss(const WeightedSubset& subset, const VectorXd& values);

/// m draws with replacement from q = s/S, weights 1/(m q).
WeightedSubset iid_coreset(const VectorXd& s, Index m, Rng& rng);

/// One DPP draw, weights 1/K_ii. Likelihood kernels are converted first.
WeightedSubset dpp_coreset(const KernelMatrix& kern, Rng& rng);
/// Projection DPP with kernel U U^T given orthonormal columns U.
WeightedSubset dpp_coreset(const MatrixXd& u, Rng& rng);

/// Marginal diagonal of either kernel kind.
VectorXd inclusion_probabilities(const KernelMatrix& kern);

/// sum_A P(A) L_A(f) by enumerating the exact law.
double expected_dpp_loss_exact(const KernelMatrix& kern, const VectorXd& values);

/// Var[sum_{i in S} h_i] = sum h_i^2 K_ii - sum h_i h_j |K_ij|^2 for a
/// Hermitian marginal kernel.
double linear_statistic_variance(const KernelMatrix& marginal, const VectorXd& h);

using GradientFn = std::function<VectorXd(Index)>;

/// Estimate of the mean gradient (1/N) sum_i grad(i) from one DPP draw:
/// (1/N) sum_{i in S} grad(i) / K_ii with K over the counting measure.
VectorXd sgd_minibatch_estimator(const GradientFn& grad, const KernelMatrix& kern, Rng& rng);
VectorXd sgd_minibatch_estimator(const GradientFn& grad, const MatrixXd& u, Rng& rng);

struct SgdVarianceRow {
  Index m = 0;
  VectorXd mean;
  VectorXd full;
  double variance = 0.0;        // empirical trace of the covariance
  double exact_variance = 0.0;  // same quantity from the kernel formula
  double iid_variance = 0.0;    // uniform i.i.d. minibatch of size m, exact
};

/// Projection DPP minibatches built from orthonormalized polynomial
/// features of the data rows, for each m in `m_list`.
std::vector<SgdVarianceRow> sgd_variance_sweep(const MatrixXd& data, const GradientFn& grad,
                                               const std::vector<Index>& m_list, int reps,
                                               Rng& rng);

/// Orthonormal (counting measure) graded-monomial features of box-normalized rows.
MatrixXd polynomial_features(const MatrixXd& data, Index m);

enum class CoresetMethod { Iid, Dpp };
CoresetMethod coreset_method_from_string(const std::string& s);

struct UniformErrorOptions {
  int probes = 200;
  double lower_bound = 1e-6;  // c in |L(f)|/N >= c
  SensitivityOptions sensitivity;
  bool run_iid = true;
  bool run_dpp = true;
};

struct UniformErrorRow {
  double eps = 0.0;
  double fail_iid = 0.0;
  double fail_dpp = 0.0;
  double se_iid = 0.0;
  double se_dpp = 0.0;
};

struct UniformErrorTable {
  Index m = 0;
  std::vector<UniformErrorRow> rows;
  std::vector<double> sup_iid;  // per replicate sup_f |L_S/L - 1|
  std::vector<double> sup_dpp;
};

/// P(exists f in the probe set: |L_S(f)/L(f) - 1| >= eps) for sensitivity
/// i.i.d. coresets of size m and projection DPP coresets of rank m.
UniformErrorTable uniform_error_experiment(const LossFamily& family, Index m,
                                           const std::vector<double>& eps, int reps, Rng& rng,
                                           const UniformErrorOptions& opt = {});

/// n log-spaced values in [1e-3, 1].
std::vector<double> log_epsilon_grid(int n);

}  // namespace negdep

#endif
