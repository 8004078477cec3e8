#include "negdep/coreset.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <numbers>

#include "negdep/quadrature.hpp"
#include "negdep/sampler.hpp"

namespace negdep {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

MatrixXd orthonormal_columns(const MatrixXd& a) {
  Eigen::HouseholderQR<MatrixXd> qr(a);
  const MatrixXd r = qr.matrixQR().topRows(a.cols()).triangularView<Eigen::Upper>();
  const double scale = r.diagonal().cwiseAbs().maxCoeff();
  if (!(scale > 0.0) || r.diagonal().cwiseAbs().minCoeff() < 1e-10 * scale)
    throw std::invalid_argument("feature columns are linearly dependent on the data; lower m");
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
  // Second pass keeps orthonormality at roundoff for wide feature sets.
  Eigen::HouseholderQR<MatrixXd> qr2(q);
  return qr2.householderQ() * MatrixXd::Identity(a.rows(), a.cols());
}

MatrixXd box_normalize(const MatrixXd& data) {
  MatrixXd x(data.rows(), data.cols());
  for (Index c = 0; c < data.cols(); ++c) {
    const double lo = data.col(c).minCoeff();
    const double hi = data.col(c).maxCoeff();
    if (hi > lo)
      x.col(c) = ((data.col(c).array() - lo) * (2.0 / (hi - lo)) - 1.0).matrix();
    else
      x.col(c).setZero();
  }
  return x;
}

VectorXd marginal_diagonal(const KernelMatrix& kern) {
  const KernelMatrix marg = kern.kind() == KernelKind::Likelihood ? l_to_marginal(kern) : kern;
  VectorXd p = marg.entries().diagonal().real();
  for (Index i = 0; i < p.size(); ++i)
    if (!(p(i) > 0.0)) throw std::invalid_argument("kernel has a zero diagonal entry");
  return p;
}

void check_finite(const VectorXd& v, const char* what) {
  if (!v.allFinite()) throw NumericalError(std::string(what) + " is not finite");
}

}  // namespace

const char* to_string(FamilyKind kind) {
  switch (kind) {
    case FamilyKind::KMeans: return "kmeans";
    case FamilyKind::LinearRegression: return "regression";
    case FamilyKind::BandLimited: return "bandlimited";
    case FamilyKind::Finite: return "finite";
  }
  return "?";
}

FamilyKind family_kind_from_string(const std::string& s) {
  if (s == "kmeans") return FamilyKind::KMeans;
  if (s == "regression") return FamilyKind::LinearRegression;
  if (s == "bandlimited") return FamilyKind::BandLimited;
  if (s == "finite") return FamilyKind::Finite;
  throw std::invalid_argument("unknown family: " + s);
}

LossFamily LossFamily::kmeans(MatrixXd data, int k) {
  if (data.rows() == 0 || data.cols() == 0) throw std::invalid_argument("empty data");
  if (k < 1) throw std::invalid_argument("k must be positive");
  if (!data.allFinite()) throw std::invalid_argument("data is not finite");
  LossFamily f;
  f.kind_ = FamilyKind::KMeans;
  f.lo_ = data.colwise().minCoeff().transpose();
  f.hi_ = data.colwise().maxCoeff().transpose();
  f.data_ = std::move(data);
  f.k_ = k;
  return f;
}

LossFamily LossFamily::linear_regression(MatrixXd y, VectorXd z, double radius) {
  if (y.rows() == 0 || y.rows() != z.size()) throw std::invalid_argument("regression data shape");
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  if (!y.allFinite() || !z.allFinite()) throw std::invalid_argument("data is not finite");
  LossFamily f;
  f.kind_ = FamilyKind::LinearRegression;
  f.data_.resize(y.rows(), y.cols() + 1);
  f.data_ << y, z;
  f.target_ = std::move(z);
  f.radius_ = radius;
  return f;
}

LossFamily LossFamily::band_limited(Index n, int bandwidth, double rho) {
  if (bandwidth < 0 || n <= 2 * bandwidth) throw std::invalid_argument("need N > 2B");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("rho must lie in [0, 1)");
  LossFamily f;
  f.kind_ = FamilyKind::BandLimited;
  f.data_.resize(n, 1);
  for (Index i = 0; i < n; ++i) f.data_(i, 0) = static_cast<double>(i) / static_cast<double>(n);
  f.bandwidth_ = bandwidth;
  f.rho_ = rho;
  return f;
}

LossFamily LossFamily::finite(MatrixXd values) {
  if (values.rows() == 0 || values.cols() == 0) throw std::invalid_argument("empty query table");
  if (!values.allFinite()) throw std::invalid_argument("query table is not finite");
  LossFamily f;
  f.kind_ = FamilyKind::Finite;
  f.data_.resize(values.cols(), 1);
  for (Index i = 0; i < values.cols(); ++i) f.data_(i, 0) = static_cast<double>(i);
  f.table_ = std::move(values);
  return f;
}

int LossFamily::param_dim() const {
  switch (kind_) {
    case FamilyKind::KMeans: return k_ * static_cast<int>(data_.cols());
    case FamilyKind::LinearRegression: return static_cast<int>(data_.cols());
    case FamilyKind::BandLimited: return 2 * bandwidth_;
    case FamilyKind::Finite: return 1;
  }
  return 0;
}

VectorXd LossFamily::evaluate(const VectorXd& theta) const {
  if (theta.size() != param_dim()) throw std::invalid_argument("query has the wrong dimension");
  const Index n = size();
  VectorXd v(n);
  switch (kind_) {
    case FamilyKind::KMeans: {
      const Index d = data_.cols();
      for (Index i = 0; i < n; ++i) {
        double best = std::numeric_limits<double>::infinity();
        for (int c = 0; c < k_; ++c)
          best = std::min(best, (data_.row(i).transpose() - theta.segment(c * d, d)).squaredNorm());
        v(i) = best;
      }
      break;
    }
    case FamilyKind::LinearRegression: {
      const Index d = data_.cols() - 1;
      const VectorXd r =
          data_.leftCols(d) * theta.head(d) + VectorXd::Constant(n, theta(d)) - target_;
      v = r.array().square().matrix();
      break;
    }
    case FamilyKind::BandLimited: {
      for (Index i = 0; i < n; ++i) {
        double s = 1.0;
        for (int k = 1; k <= bandwidth_; ++k) {
          const double a = kTwoPi * k * data_(i, 0);
          s += theta(k - 1) * std::cos(a) + theta(bandwidth_ + k - 1) * std::sin(a);
        }
        v(i) = s;
      }
      break;
    }
    case FamilyKind::Finite: {
      const double q = theta(0);
      if (!(q >= 0.0) || q >= static_cast<double>(table_.rows()) || q != std::floor(q))
        throw std::invalid_argument("query index out of range");
      v = table_.row(static_cast<Index>(q)).transpose();
      break;
    }
  }
  return v;
}

VectorXd LossFamily::sample_query(Rng& rng) const {
  VectorXd t(param_dim());
  switch (kind_) {
    case FamilyKind::KMeans: {
      const Index d = data_.cols();
      for (int c = 0; c < k_; ++c)
        for (Index j = 0; j < d; ++j) t(c * d + j) = rng.uniform(lo_(j), hi_(j));
      break;
    }
    case FamilyKind::LinearRegression:
      for (Index j = 0; j < t.size(); ++j) t(j) = rng.uniform(-radius_, radius_);
      break;
    case FamilyKind::BandLimited: {
      if (t.size() == 0) break;
      for (Index j = 0; j < t.size(); ++j) t(j) = rng.normal();
      const double l1 = t.lpNorm<1>();
      t *= (l1 > 0.0 ? rho_ * rng.uniform() / l1 : 0.0);
      break;
    }
    case FamilyKind::Finite:
      t(0) = static_cast<double>(rng.below(static_cast<std::uint64_t>(table_.rows())));
      break;
  }
  return t;
}

std::vector<VectorXd> LossFamily::probe_queries(int count, Rng& rng) const {
  std::vector<VectorXd> out;
  if (enumerable()) {
    for (Index q = 0; q < table_.rows(); ++q) out.push_back(VectorXd::Constant(1, double(q)));
    return out;
  }
  if (count < 1) throw std::invalid_argument("need at least one probe");
  out.reserve(static_cast<std::size_t>(count));
  for (int i = 0; i < count; ++i) out.push_back(sample_query(rng));
  return out;
}

MatrixXd LossFamily::feature_map(Index m) const {
  const Index n = size();
  if (m < 1 || m > n) throw std::invalid_argument("feature count must lie in [1, N]");
  if (kind_ != FamilyKind::BandLimited) return polynomial_features(data_, m);
  MatrixXd f(n, m);
  for (Index i = 0; i < n; ++i) {
    f(i, 0) = 1.0;
    for (Index c = 1; c < m; ++c) {
      const double k = static_cast<double>((c + 1) / 2);
      const double a = kTwoPi * k * data_(i, 0);
      f(i, c) = (c % 2 == 1) ? std::cos(a) : std::sin(a);
    }
  }
  return orthonormal_columns(f);
}

MatrixXd polynomial_features(const MatrixXd& data, Index m) {
  if (m < 1 || m > data.rows()) throw std::invalid_argument("feature count must lie in [1, N]");
  const MatrixXd x = box_normalize(data);
  const OrthoPolyBasis basis(Measure::uniform(static_cast<int>(x.cols())), static_cast<int>(m));
  return orthonormal_columns(basis.eval_many(x));
}

double full_loss(const LossFamily& family, const VectorXd& theta) {
  const VectorXd v = family.evaluate(theta);
  check_finite(v, "loss term");
  return v.sum();
}

SensitivityBounds sensitivity_bounds(const LossFamily& family, Rng& rng,
                                     const SensitivityOptions& opt) {
  if (!(opt.safety >= 1.0)) throw std::invalid_argument("safety factor must be >= 1");
  SensitivityBounds out;
  out.s = VectorXd::Zero(family.size());
  for (const VectorXd& theta : family.probe_queries(opt.probes, rng)) {
    const VectorXd v = family.evaluate(theta);
    check_finite(v, "loss term");
    const double l = v.sum();
    if (!(std::abs(l) > 0.0)) throw NumericalError("a probed query has zero total loss");
    out.s = out.s.cwiseMax(v / l);
  }
  if (!family.enumerable()) out.s *= opt.safety;
  out.total = out.s.sum();
  return out;
}

double weighted_loss(const WeightedSubset& subset, const VectorXd& values) {
  double s = 0.0;
  for (std::size_t j = 0; j < subset.items.size(); ++j) s += subset.weights[j] * values(subset.items[j]);
  return s;
}

WeightedSubset iid_coreset(const VectorXd& s, Index m, Rng& rng) {
  if (m < 1) throw std::invalid_argument("coreset size must be positive");
  if (s.size() == 0 || !s.allFinite() || s.minCoeff() <= 0.0)
    throw std::invalid_argument("sensitivities must be positive and finite");
  std::vector<double> cum(static_cast<std::size_t>(s.size()));
  double acc = 0.0;
  for (Index i = 0; i < s.size(); ++i) cum[static_cast<std::size_t>(i)] = (acc += s(i));
  WeightedSubset out;
  out.items.reserve(static_cast<std::size_t>(m));
  out.weights.reserve(static_cast<std::size_t>(m));
  for (Index j = 0; j < m; ++j) {
    const double u = rng.uniform() * acc;
    auto it = std::upper_bound(cum.begin(), cum.end(), u);
    const Index i = std::min<Index>(it - cum.begin(), s.size() - 1);
    out.items.push_back(i);
    out.weights.push_back(acc / (static_cast<double>(m) * s(i)));
  }
  return out;
}

VectorXd inclusion_probabilities(const KernelMatrix& kern) { return marginal_diagonal(kern); }

WeightedSubset dpp_coreset(const KernelMatrix& kern, Rng& rng) {
  const VectorXd p = marginal_diagonal(kern);
  WeightedSubset out;
  out.items = sample_spectral(kern, rng).items;
  for (Index i : out.items) out.weights.push_back(1.0 / p(i));
  return out;
}

WeightedSubset dpp_coreset(const MatrixXd& u, Rng& rng) {
  const VectorXd p = u.rowwise().squaredNorm();
  if (p.minCoeff() <= 0.0) throw std::invalid_argument("kernel has a zero diagonal entry");
  WeightedSubset out;
  out.items = sample_projection_features(u, rng);
  for (Index i : out.items) out.weights.push_back(1.0 / p(i));
  return out;
}

double expected_dpp_loss_exact(const KernelMatrix& kern, const VectorXd& values) {
  if (values.size() != kern.size()) throw std::invalid_argument("values/kernel size mismatch");
  const VectorXd p = marginal_diagonal(kern);
  const VectorXd h = values.cwiseQuotient(p);
  const SubsetDistribution law = brute_force_distribution(kern);
  const auto& probs = law.probabilities();
  double e = 0.0;
  for (std::uint64_t mask = 0; mask < probs.size(); ++mask) {
    if (probs[mask] == 0.0) continue;
    double l = 0.0;
    for (std::uint64_t b = mask; b != 0; b &= b - 1) l += h(std::countr_zero(b));
    e += probs[mask] * l;
  }
  return e;
}

double linear_statistic_variance(const KernelMatrix& marginal, const VectorXd& h) {
  if (marginal.kind() != KernelKind::Marginal || !marginal.hermitian())
    throw std::invalid_argument("need a Hermitian marginal kernel");
  if (h.size() != marginal.size()) throw std::invalid_argument("size mismatch");
  const MatrixXd k2 = marginal.entries().cwiseAbs2();
  return h.cwiseProduct(h).dot(marginal.entries().diagonal().real()) - h.dot(k2 * h);
}

namespace {

VectorXd mean_gradient_estimate(const GradientFn& grad, const std::vector<Index>& items,
                                const VectorXd& p) {
  VectorXd acc;
  for (Index i : items) {
    const VectorXd g = grad(i);
    if (acc.size() == 0) acc = VectorXd::Zero(g.size());
    if (g.size() != acc.size()) throw std::invalid_argument("gradient size changed between items");
    acc += g / p(i);
  }
  acc /= static_cast<double>(p.size());
  check_finite(acc, "gradient estimate");
  return acc;
}

}  // namespace

VectorXd sgd_minibatch_estimator(const GradientFn& grad, const KernelMatrix& kern, Rng& rng) {
  const VectorXd p = marginal_diagonal(kern);
  return mean_gradient_estimate(grad, sample_spectral(kern, rng).items, p);
}

VectorXd sgd_minibatch_estimator(const GradientFn& grad, const MatrixXd& u, Rng& rng) {
  const VectorXd p = u.rowwise().squaredNorm();
  if (p.minCoeff() <= 0.0) throw std::invalid_argument("kernel has a zero diagonal entry");
  return mean_gradient_estimate(grad, sample_projection_features(u, rng), p);
}

std::vector<SgdVarianceRow> sgd_variance_sweep(const MatrixXd& data, const GradientFn& grad,
                                               const std::vector<Index>& m_list, int reps,
                                               Rng& rng) {
  if (reps < 2) throw std::invalid_argument("need at least two replicates");
  const Index n = data.rows();
  MatrixXd g;
  for (Index i = 0; i < n; ++i) {
    const VectorXd gi = grad(i);
    if (i == 0) g.resize(n, gi.size());
    g.row(i) = gi.transpose();
  }
  check_finite(Eigen::Map<const VectorXd>(g.data(), g.size()), "gradient");
  const VectorXd full = g.colwise().mean().transpose();
  const double spread = (g.rowwise() - full.transpose()).squaredNorm() / static_cast<double>(n);
  auto table = [&g](Index i) -> VectorXd { return g.row(i).transpose(); };

  std::vector<SgdVarianceRow> rows;
  for (std::size_t t = 0; t < m_list.size(); ++t) {
    const Index m = m_list[t];
    const MatrixXd u = polynomial_features(data, m);
    const VectorXd p = u.rowwise().squaredNorm();
    SgdVarianceRow row;
    row.m = m;
    row.full = full;
    MatrixXd est(reps, g.cols());
    Rng base = rng.split(t);
    for (int r = 0; r < reps; ++r) {
      Rng rr = base.split(static_cast<std::uint64_t>(r));
      est.row(r) = sgd_minibatch_estimator(table, u, rr).transpose();
    }
    row.mean = est.colwise().mean().transpose();
    row.variance = (est.rowwise() - row.mean.transpose()).squaredNorm() / (reps - 1.0);
    const MatrixXd k2 = (u * u.transpose()).cwiseAbs2();
    double exact = 0.0;
    for (Index c = 0; c < g.cols(); ++c) {
      const VectorXd h = g.col(c).cwiseQuotient(p) / static_cast<double>(n);
      exact += h.cwiseProduct(h).dot(p) - h.dot(k2 * h);
    }
    row.exact_variance = exact;
    row.iid_variance = spread / static_cast<double>(m);
    rows.push_back(std::move(row));
  }
  return rows;
}

CoresetMethod coreset_method_from_string(const std::string& s) {
  if (s == "iid") return CoresetMethod::Iid;
  if (s == "dpp") return CoresetMethod::Dpp;
  throw std::invalid_argument("unknown coreset method: " + s);
}

UniformErrorTable uniform_error_experiment(const LossFamily& family, Index m,
                                           const std::vector<double>& eps, int reps, Rng& rng,
                                           const UniformErrorOptions& opt) {
  if (reps < 1) throw std::invalid_argument("need at least one replicate");
  if (m < 1 || m > family.size()) throw std::invalid_argument("m must lie in [1, N]");
  Rng probe_rng = rng.split(0);
  const auto probes = family.probe_queries(opt.probes, probe_rng);
  const Index n = family.size();
  MatrixXd values(static_cast<Index>(probes.size()), n);
  VectorXd total(values.rows());
  for (Index q = 0; q < values.rows(); ++q) {
    values.row(q) = family.evaluate(probes[static_cast<std::size_t>(q)]).transpose();
    total(q) = values.row(q).sum();
    if (!std::isfinite(total(q))) throw NumericalError("loss is not finite");
    if (std::abs(total(q)) / static_cast<double>(n) < opt.lower_bound)
      throw std::invalid_argument("lower-bound assumption |L(f)|/N >= c fails on this instance");
  }

  auto sup_error = [&](const WeightedSubset& s) {
    VectorXd ls = VectorXd::Zero(values.rows());
    for (std::size_t j = 0; j < s.items.size(); ++j) ls += s.weights[j] * values.col(s.items[j]);
    return (ls.cwiseQuotient(total).array() - 1.0).abs().maxCoeff();
  };

  UniformErrorTable out;
  out.m = m;
  if (opt.run_iid) {
    Rng srng = rng.split(1);
    const SensitivityBounds sens = sensitivity_bounds(family, srng, opt.sensitivity);
    Rng base = rng.split(2);
    for (int r = 0; r < reps; ++r) {
      Rng rr = base.split(static_cast<std::uint64_t>(r));
      out.sup_iid.push_back(sup_error(iid_coreset(sens.s, m, rr)));
    }
  }
  if (opt.run_dpp) {
    const MatrixXd u = family.feature_map(m);
    Rng base = rng.split(3);
    for (int r = 0; r < reps; ++r) {
      Rng rr = base.split(static_cast<std::uint64_t>(r));
      out.sup_dpp.push_back(sup_error(dpp_coreset(u, rr)));
    }
  }

  auto rate = [reps](const std::vector<double>& sup, double e, double& se) {
    if (sup.empty()) {
      se = std::numeric_limits<double>::quiet_NaN();
      return std::numeric_limits<double>::quiet_NaN();
    }
    const double p =
        static_cast<double>(std::count_if(sup.begin(), sup.end(), [e](double s) { return s >= e; })) /
        reps;
    se = std::sqrt(p * (1.0 - p) / reps);
    return p;
  };
  for (double e : eps) {
    UniformErrorRow row;
    row.eps = e;
    row.fail_iid = rate(out.sup_iid, e, row.se_iid);
    row.fail_dpp = rate(out.sup_dpp, e, row.se_dpp);
    out.rows.push_back(row);
  }
  return out;
}

std::vector<double> log_epsilon_grid(int n) {
  if (n < 2) throw std::invalid_argument("grid needs at least two points");
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, -3.0 + 3.0 * i / (n - 1));
  return g;
}

}  // namespace negdep
