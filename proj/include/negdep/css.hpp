#ifndef NEGDEP_CSS_HPP
#define NEGDEP_CSS_HPP

#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/random.hpp"
#include "negdep/sampler.hpp"

namespace negdep {

/// X with a cached thin SVD, singular values nonincreasing.
class FeatureMatrix {
 public:
  explicit FeatureMatrix(MatrixXd x);

  const MatrixXd& x() const { return x_; }
  Index rows() const { return x_.rows(); }
  Index cols() const { return x_.cols(); }
  const MatrixXd& u() const { return u_; }
  const VectorXd& sigma() const { return sigma_; }
  /// d x min(N, d).
  const MatrixXd& v() const { return v_; }
  /// Singular values above 1e-10 * sigma_1.
  Index rank() const { return rank_; }
  /// ||X - Pi_k X||_F^2 = sum_{i > k} sigma_i^2.
  double optimal_error(Index k) const;

 private:
  MatrixXd x_, u_, v_;
  VectorXd sigma_;
  Index rank_ = 0;
};

enum class CssMethod { LengthSquared, Leverage, Volume, Dpp };

const char* to_string(CssMethod m);
CssMethod css_method_from_string(const std::string& s);

struct CssResult {
  std::vector<Index> columns;  // sorted, distinct
  double error = 0.0;          // ||X - Pi_{S,k} X||_F^2
  CssMethod method = CssMethod::Dpp;
};

/// k-leverage scores sum_{i<k} V_ji^2.
VectorXd leverage_scores(const FeatureMatrix& fm, Index k);

/// ||X - Pi_{S,k} X||_F^2 where Pi_{S,k} X is the best rank-k
/// approximation of X_S X_S^+ X.
double approx_error(const MatrixXd& x, const std::vector<Index>& s, Index k);

/// Draws S. The i.i.d. methods take s draws with replacement and keep the
/// distinct columns; volume and dpp require s == k.
CssResult css_select(CssMethod method, const FeatureMatrix& fm, Index k, Index s, Rng& rng);

/// Exact law of the selected column set (d <= 20). i.i.d. methods use s = k draws.
SubsetDistribution css_law(CssMethod method, const FeatureMatrix& fm, Index k);

/// sum_S P(S) error(S) over the exact law.
double expected_error_exact(CssMethod method, const FeatureMatrix& fm, Index k);

/// sum over |S| = k of det(X_S^T X_S), by enumeration.
double volume_normalizer(const MatrixXd& x, Index k);

struct Flatness {
  double beta = 0.0;  // NaN when sigma_{k+1} = 0
  Index sparsity = 0;
  bool tail_zero = false;
};

Flatness flatness_and_sparsity(const FeatureMatrix& fm, Index k);

}  // namespace negdep

#endif
