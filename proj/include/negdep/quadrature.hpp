#ifndef NEGDEP_QUADRATURE_HPP
#define NEGDEP_QUADRATURE_HPP

#include <functional>
#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/random.hpp"

namespace negdep {

/// Weight (1 - x)^alpha (1 + x)^beta on [-1, 1].
struct JacobiWeight {
  double alpha = 0.0;
  double beta = 0.0;
};

/// Product measure on [-1, 1]^d with a Jacobi weight per axis.
struct Measure {
  std::vector<JacobiWeight> axes;

  static Measure uniform(int d);
  static Measure jacobi(int d, double alpha, double beta);
  int dim() const { return static_cast<int>(axes.size()); }
  double total_mass() const;
  double density(const VectorXd& x) const;
};

/// Orthonormal three-term recurrence
///   sqrt(b[k+1]) p_{k+1} = (x - a[k]) p_k - sqrt(b[k]) p_{k-1},  p_0 = 1/sqrt(mu0).
struct Recurrence {
  VectorXd a;  // a[0..n-1]
  VectorXd b;  // b[0] unused, b[1..n]
  double mu0 = 0.0;
};

Recurrence jacobi_recurrence(const JacobiWeight& w, int n);

/// Orthonormal polynomials of a product measure in graded lexicographic
/// order (x1 before x2 within a degree). For product measures Gram-Schmidt
/// on the graded monomials yields exactly the products of the univariate
/// orthonormal families, so they are evaluated by recurrence.
class OrthoPolyBasis {
 public:
  OrthoPolyBasis(Measure mu, int n);

  int dim() const { return mu_.dim(); }
  int size() const { return n_; }
  const Measure& measure() const { return mu_; }
  const std::vector<std::vector<int>>& multi_indices() const { return alpha_; }
  int max_axis_degree() const { return max_deg_; }

  /// phi_0..phi_{N-1} at x.
  VectorXd eval(const VectorXd& x) const;
  /// Rows are points; result is points x N.
  MatrixXd eval_many(const MatrixXd& x) const;
  double kernel(const VectorXd& x, const VectorXd& y) const;
  double kernel_diag(const VectorXd& x) const;
  /// Coefficients over the first N graded monomials (row k = phi_k).
  MatrixXd monomial_coefficients() const;

 private:
  Measure mu_;
  int n_;
  int max_deg_ = 0;
  std::vector<std::vector<int>> alpha_;
  std::vector<Recurrence> rec_;
};

/// First n multi-indices of N^d in graded lexicographic order.
std::vector<std::vector<int>> graded_multi_indices(int d, int n);

OrthoPolyBasis build_basis(const Measure& mu, int n);

/// Nodes are rows.
struct QuadratureRule {
  MatrixXd nodes;
  VectorXd weights;
  Index size() const { return weights.size(); }
};

using TestFunction = std::function<double(const VectorXd&)>;

/// Gauss rule from the zeros of phi_N, weights 1 / K_N(x, x).
QuadratureRule gauss_rule_1d(const OrthoPolyBasis& basis, int n);

/// Gauss nodes and weights of a univariate Jacobi weight.
QuadratureRule gauss_jacobi(const JacobiWeight& w, int n);

/// Projection DPP with kernel K_N on a discretised product measure. The
/// discretisation uses grid_res Gauss atoms per axis carrying their Gauss
/// weights as cell masses, so the discrete Gram matrix is exact whenever
/// 2 * max_axis_degree < 2 * grid_res.
class OpeSampler {
 public:
  OpeSampler(const OrthoPolyBasis& basis, int grid_res);

  QuadratureRule sample(Rng& rng) const;
  Index atoms() const { return atoms_.rows(); }
  const MatrixXd& atoms_matrix() const { return atoms_; }
  /// Discrete projection features (atoms x N, orthonormal columns).
  const MatrixXd& features() const { return features_; }
  double gram_error() const { return gram_error_; }

 private:
  MatrixXd atoms_;
  VectorXd inv_kdiag_;
  MatrixXd features_;
  double gram_error_ = 0.0;
};

QuadratureRule ope_dpp_rule(const OrthoPolyBasis& basis, int grid_res, Rng& rng);

double estimate(const QuadratureRule& rule, const TestFunction& f);

/// Proposal density for i.i.d. importance sampling.
struct Proposal {
  std::function<double(const VectorXd&)> density;
  std::function<VectorXd(Rng&)> draw;
};

Proposal uniform_proposal(int d);

QuadratureRule importance_rule(const Proposal& q, int m, const Measure& mu, Rng& rng);

enum class QuadMethod { Gauss, Iid, Dpp };
QuadMethod quad_method_from_string(const std::string& s);

struct VarianceRow {
  int n = 0;
  double mean = 0.0;
  double variance = 0.0;
};

struct SweepOptions {
  int grid_res = 0;  // 0 picks 2^12 for d = 1 and 2^8 per axis otherwise
};

std::vector<VarianceRow> variance_sweep(QuadMethod method, const Measure& mu, const TestFunction& f,
                                        const std::vector<int>& n_list, int replicates, Rng& rng,
                                        const SweepOptions& opt = {});

/// Named integrands for the CLI: "bump" = prod (1 - x_i^2)^2, "square" = sum x_i^2,
/// "cosine" = prod cos(pi x_i / 2), "linear" = sum x_i.
TestFunction named_test_function(const std::string& name);

}  // namespace negdep

#endif
