#include "negdep/css.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>

#include "negdep/kernel.hpp"

namespace negdep {

namespace {

constexpr double kPinvTol = 1e-10;

void check_k(const FeatureMatrix& fm, Index k) {
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (k > fm.rank()) throw std::invalid_argument("k exceeds the numerical rank of X");
}

double binomial(Index n, Index k) {
  double c = 1.0;
  for (Index i = 1; i <= k; ++i) c = c * static_cast<double>(n - k + i) / static_cast<double>(i);
  return c;
}

// All masks over d bits with exactly k set, in increasing order.
std::vector<std::uint64_t> k_subsets(Index d, Index k) {
  if (d > 20) throw std::invalid_argument("exhaustive enumeration needs d <= 20");
  if (binomial(d, k) > 1e5) throw std::invalid_argument("enumeration too large");
  std::vector<std::uint64_t> out;
  for (std::uint64_t m = 0; m < (std::uint64_t{1} << d); ++m)
    if (std::popcount(m) == k) out.push_back(m);
  return out;
}

VectorXd column_probabilities(CssMethod method, const FeatureMatrix& fm, Index k) {
  VectorXd p;
  if (method == CssMethod::LengthSquared)
    p = fm.x().colwise().squaredNorm().transpose();
  else
    p = leverage_scores(fm, k);
  const double s = p.sum();
  if (!(s > 0.0)) throw std::invalid_argument("all columns are zero");
  return p / s;
}

std::vector<Index> draw_iid(const VectorXd& p, Index s, Rng& rng) {
  std::vector<Index> out;
  for (Index t = 0; t < s; ++t) {
    double u = rng.uniform();
    Index i = 0;
    while (i + 1 < p.size() && u >= p(i)) u -= p(i++);
    // Never land on a zero-probability column through roundoff.
    while (p(i) == 0.0 && i > 0) --i;
    out.push_back(i);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

}  // namespace

FeatureMatrix::FeatureMatrix(MatrixXd x) : x_(std::move(x)) {
  if (x_.size() == 0) throw std::invalid_argument("empty matrix");
  if (!x_.allFinite()) throw std::invalid_argument("matrix is not finite");
  Eigen::JacobiSVD<MatrixXd> svd(x_, Eigen::ComputeThinU | Eigen::ComputeThinV);
  u_ = svd.matrixU();
  v_ = svd.matrixV();
  sigma_ = svd.singularValues();
  const double cut = kPinvTol * (sigma_.size() ? sigma_(0) : 0.0);
  rank_ = 0;
  for (Index i = 0; i < sigma_.size(); ++i)
    if (sigma_(i) > cut) ++rank_;
}

double FeatureMatrix::optimal_error(Index k) const {
  double e = 0.0;
  for (Index i = k; i < sigma_.size(); ++i) e += sigma_(i) * sigma_(i);
  return e;
}

const char* to_string(CssMethod m) {
  switch (m) {
    case CssMethod::LengthSquared: return "length_squared";
    case CssMethod::Leverage: return "leverage";
    case CssMethod::Volume: return "volume";
    case CssMethod::Dpp: return "dpp";
  }
  return "?";
}

CssMethod css_method_from_string(const std::string& s) {
  if (s == "length_squared") return CssMethod::LengthSquared;
  if (s == "leverage") return CssMethod::Leverage;
  if (s == "volume") return CssMethod::Volume;
  if (s == "dpp") return CssMethod::Dpp;
  throw std::invalid_argument("unknown css method: " + s);
}

VectorXd leverage_scores(const FeatureMatrix& fm, Index k) {
  check_k(fm, k);
  return fm.v().leftCols(k).rowwise().squaredNorm();
}

double approx_error(const MatrixXd& x, const std::vector<Index>& s, Index k) {
  if (s.empty()) throw std::invalid_argument("column set is empty");
  if (k < 1) throw std::invalid_argument("k must be positive");
  MatrixXd xs(x.rows(), static_cast<Index>(s.size()));
  for (std::size_t j = 0; j < s.size(); ++j) {
    if (s[j] < 0 || s[j] >= x.cols()) throw std::invalid_argument("column index out of range");
    xs.col(static_cast<Index>(j)) = x.col(s[j]);
  }
  Eigen::JacobiSVD<MatrixXd> svd(xs, Eigen::ComputeThinU);
  const VectorXd& sv = svd.singularValues();
  Index r = 0;
  while (r < sv.size() && sv(r) > kPinvTol * sv(0)) ++r;
  const MatrixXd q = svd.matrixU().leftCols(r);
  const MatrixXd y = q * (q.transpose() * x);
  if (r <= k) return (x - y).squaredNorm();
  Eigen::JacobiSVD<MatrixXd> ys(y, Eigen::ComputeThinU | Eigen::ComputeThinV);
  const MatrixXd yk = ys.matrixU().leftCols(k) * ys.singularValues().head(k).asDiagonal() *
                      ys.matrixV().leftCols(k).transpose();
  return (x - yk).squaredNorm();
}

CssResult css_select(CssMethod method, const FeatureMatrix& fm, Index k, Index s, Rng& rng) {
  check_k(fm, k);
  CssResult out;
  out.method = method;
  switch (method) {
    case CssMethod::LengthSquared:
    case CssMethod::Leverage:
      if (s < k) throw std::invalid_argument("i.i.d. selection needs s >= k");
      out.columns = draw_iid(column_probabilities(method, fm, k), s, rng);
      break;
    case CssMethod::Volume: {
      if (s != k) throw std::invalid_argument("volume sampling needs s == k");
      const MatrixXd g = fm.x().transpose() * fm.x();
      out.columns = sample_kdpp(KernelMatrix::from_real(g, KernelKind::Likelihood), k, rng).items;
      break;
    }
    case CssMethod::Dpp:
      if (s != k) throw std::invalid_argument("dpp selection needs s == k");
      out.columns = sample_projection_features(MatrixXd(fm.v().leftCols(k)), rng);
      break;
  }
  out.error = approx_error(fm.x(), out.columns, k);
  return out;
}

SubsetDistribution css_law(CssMethod method, const FeatureMatrix& fm, Index k) {
  check_k(fm, k);
  const Index d = fm.cols();
  if (d > 20) throw std::invalid_argument("exact law needs d <= 20");
  std::vector<double> probs(std::size_t{1} << d, 0.0);
  switch (method) {
    case CssMethod::LengthSquared:
    case CssMethod::Leverage: {
      if (std::pow(static_cast<double>(d), static_cast<double>(k)) > 1e6)
        throw std::invalid_argument("enumeration too large");
      const VectorXd p = column_probabilities(method, fm, k);
      std::vector<Index> idx(static_cast<std::size_t>(k), 0);
      while (true) {
        double pr = 1.0;
        std::uint64_t mask = 0;
        for (Index i : idx) {
          pr *= p(i);
          mask |= std::uint64_t{1} << i;
        }
        probs[mask] += pr;
        std::size_t t = 0;
        while (t < idx.size() && ++idx[t] == d) idx[t++] = 0;
        if (t == idx.size()) break;
      }
      break;
    }
    case CssMethod::Volume: {
      const MatrixXd g = fm.x().transpose() * fm.x();
      double z = 0.0;
      for (std::uint64_t m : k_subsets(d, k)) {
        const auto s = from_mask(m);
        MatrixXd gs(k, k);
        for (Index a = 0; a < k; ++a)
          for (Index b = 0; b < k; ++b) gs(a, b) = g(s[a], s[b]);
        const double det = std::max(0.0, gs.determinant());
        probs[m] = det;
        z += det;
      }
      if (!(z > 0.0)) throw std::invalid_argument("no k columns are linearly independent");
      for (double& p : probs) p /= z;
      break;
    }
    case CssMethod::Dpp: {
      const MatrixXd vk = fm.v().leftCols(k);
      for (std::uint64_t m : k_subsets(d, k)) {
        const auto s = from_mask(m);
        MatrixXd sub(k, k);
        for (Index a = 0; a < k; ++a) sub.row(a) = vk.row(s[a]);
        const double det = sub.determinant();
        probs[m] = det * det;
      }
      break;
    }
  }
  return SubsetDistribution(static_cast<int>(d), std::move(probs));
}

double expected_error_exact(CssMethod method, const FeatureMatrix& fm, Index k) {
  const SubsetDistribution law = css_law(method, fm, k);
  double e = 0.0;
  const auto& p = law.probabilities();
  for (std::uint64_t m = 1; m < p.size(); ++m)
    if (p[m] > 0.0) e += p[m] * approx_error(fm.x(), from_mask(m), k);
  return e;
}

double volume_normalizer(const MatrixXd& x, Index k) {
  const MatrixXd g = x.transpose() * x;
  double z = 0.0;
  for (std::uint64_t m : k_subsets(x.cols(), k)) {
    const auto s = from_mask(m);
    MatrixXd gs(k, k);
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) gs(a, b) = g(s[a], s[b]);
    z += gs.determinant();
  }
  return z;
}

Flatness flatness_and_sparsity(const FeatureMatrix& fm, Index k) {
  check_k(fm, k);
  Flatness f;
  const Index d = fm.cols();
  const VectorXd& sv = fm.sigma();
  const double cut = kPinvTol * sv(0);
  const VectorXd lev = leverage_scores(fm, k);
  f.sparsity = (lev.array() > 1e-12).count();
  if (k >= sv.size() || sv(k) <= cut || k >= d) {
    f.tail_zero = true;
    f.beta = std::numeric_limits<double>::quiet_NaN();
    return f;
  }
  f.beta = sv(k) * sv(k) / (fm.optimal_error(k) / static_cast<double>(d - k));
  return f;
}

}  // namespace negdep
