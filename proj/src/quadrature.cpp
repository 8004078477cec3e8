#include "negdep/quadrature.hpp"

#include <cmath>
#include <map>
#include <numbers>

#include "negdep/sampler.hpp"

namespace negdep {

Measure Measure::uniform(int d) { return jacobi(d, 0.0, 0.0); }

Measure Measure::jacobi(int d, double alpha, double beta) {
  if (d < 1) throw std::invalid_argument("measure dimension must be >= 1");
  if (!(alpha > -1.0) || !(beta > -1.0))
    throw std::invalid_argument("Jacobi exponents must exceed -1");
  Measure m;
  m.axes.assign(static_cast<std::size_t>(d), JacobiWeight{alpha, beta});
  return m;
}

namespace {

double jacobi_mass(const JacobiWeight& w) {
  return std::exp((w.alpha + w.beta + 1.0) * std::log(2.0) + std::lgamma(w.alpha + 1.0) +
                  std::lgamma(w.beta + 1.0) - std::lgamma(w.alpha + w.beta + 2.0));
}

}  // namespace

double Measure::total_mass() const {
  double m = 1.0;
  for (const auto& w : axes) m *= jacobi_mass(w);
  return m;
}

double Measure::density(const VectorXd& x) const {
  if (x.size() != dim()) throw std::invalid_argument("point dimension does not match measure");
  double v = 1.0;
  for (int a = 0; a < dim(); ++a) {
    if (x[a] < -1.0 || x[a] > 1.0) return 0.0;
    const auto& w = axes[static_cast<std::size_t>(a)];
    if (w.alpha != 0.0) v *= std::pow(1.0 - x[a], w.alpha);
    if (w.beta != 0.0) v *= std::pow(1.0 + x[a], w.beta);
  }
  return v;
}

Recurrence jacobi_recurrence(const JacobiWeight& w, int n) {
  if (n < 1) throw std::invalid_argument("recurrence length must be >= 1");
  const double al = w.alpha, be = w.beta, ab = al + be;
  Recurrence r;
  r.a.resize(n);
  r.b = VectorXd::Zero(n + 1);
  r.mu0 = jacobi_mass(w);
  r.a[0] = (be - al) / (ab + 2.0);
  for (int k = 1; k < n; ++k) {
    const double s = 2.0 * k + ab;
    r.a[k] = (be * be - al * al) / (s * (s + 2.0));
  }
  for (int k = 1; k <= n; ++k) {
    const double s = 2.0 * k + ab;
    if (k == 1) {
      r.b[1] = 4.0 * (1.0 + al) * (1.0 + be) / ((2.0 + ab) * (2.0 + ab) * (3.0 + ab));
    } else {
      r.b[k] = 4.0 * k * (k + al) * (k + be) * (k + ab) / (s * s * (s + 1.0) * (s - 1.0));
    }
  }
  return r;
}

namespace {

/// p_0..p_{deg}(x) by the orthonormal recurrence.
void eval_univariate(const Recurrence& r, int deg, double x, double* out) {
  out[0] = 1.0 / std::sqrt(r.mu0);
  if (deg == 0) return;
  out[1] = (x - r.a[0]) * out[0] / std::sqrt(r.b[1]);
  for (int k = 1; k < deg; ++k)
    out[k + 1] = ((x - r.a[k]) * out[k] - std::sqrt(r.b[k]) * out[k - 1]) / std::sqrt(r.b[k + 1]);
}

}  // namespace

std::vector<std::vector<int>> graded_multi_indices(int d, int n) {
  std::vector<std::vector<int>> out;
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  std::vector<int> cur(static_cast<std::size_t>(d));
  // Emit all compositions of `total` over axes [axis, d) with earlier axes taking more first.
  std::function<void(int, int)> rec = [&](int axis, int total) {
    if (static_cast<int>(out.size()) >= n) return;
    if (axis == d - 1) {
      cur[static_cast<std::size_t>(axis)] = total;
      out.push_back(cur);
      return;
    }
    for (int v = total; v >= 0; --v) {
      cur[static_cast<std::size_t>(axis)] = v;
      rec(axis + 1, total - v);
      if (static_cast<int>(out.size()) >= n) return;
    }
  };
  for (int t = 0; static_cast<int>(out.size()) < n; ++t) rec(0, t);
  return out;
}

OrthoPolyBasis::OrthoPolyBasis(Measure mu, int n) : mu_(std::move(mu)), n_(n) {
  if (n < 1) throw std::invalid_argument("basis size must be >= 1");
  if (mu_.dim() < 1) throw std::invalid_argument("measure has no axes");
  alpha_ = graded_multi_indices(mu_.dim(), n);
  for (const auto& a : alpha_)
    for (int v : a) max_deg_ = std::max(max_deg_, v);
  for (const auto& w : mu_.axes) rec_.push_back(jacobi_recurrence(w, max_deg_ + 1));
}

VectorXd OrthoPolyBasis::eval(const VectorXd& x) const {
  const int d = dim();
  if (x.size() != d) throw std::invalid_argument("point dimension does not match basis");
  MatrixXd tab(max_deg_ + 1, d);
  for (int a = 0; a < d; ++a) eval_univariate(rec_[static_cast<std::size_t>(a)], max_deg_, x[a], tab.col(a).data());
  VectorXd out(n_);
  for (int k = 0; k < n_; ++k) {
    double v = 1.0;
    for (int a = 0; a < d; ++a) v *= tab(alpha_[static_cast<std::size_t>(k)][static_cast<std::size_t>(a)], a);
    out[k] = v;
  }
  return out;
}

MatrixXd OrthoPolyBasis::eval_many(const MatrixXd& x) const {
  MatrixXd out(x.rows(), n_);
  for (Index i = 0; i < x.rows(); ++i) out.row(i) = eval(x.row(i).transpose()).transpose();
  return out;
}

double OrthoPolyBasis::kernel(const VectorXd& x, const VectorXd& y) const {
  return eval(x).dot(eval(y));
}

double OrthoPolyBasis::kernel_diag(const VectorXd& x) const { return eval(x).squaredNorm(); }

MatrixXd OrthoPolyBasis::monomial_coefficients() const {
  const int d = dim();
  // Univariate monomial coefficients per axis, uni[a](k, j) = coeff of x^j in p_k.
  std::vector<MatrixXd> uni;
  for (int a = 0; a < d; ++a) {
    const Recurrence& r = rec_[static_cast<std::size_t>(a)];
    MatrixXd c = MatrixXd::Zero(max_deg_ + 1, max_deg_ + 1);
    c(0, 0) = 1.0 / std::sqrt(r.mu0);
    for (int k = 0; k < max_deg_; ++k) {
      VectorXd next = VectorXd::Zero(max_deg_ + 1);
      for (int j = 0; j <= k; ++j) {
        next[j + 1] += c(k, j);
        next[j] -= r.a[k] * c(k, j);
        if (k > 0) next[j] -= std::sqrt(r.b[k]) * c(k - 1, j);
      }
      c.row(k + 1) = next.transpose() / std::sqrt(r.b[k + 1]);
    }
    uni.push_back(c);
  }
  std::map<std::vector<int>, int> pos;
  for (int k = 0; k < n_; ++k) pos[alpha_[static_cast<std::size_t>(k)]] = k;
  MatrixXd out = MatrixXd::Zero(n_, n_);
  for (int k = 0; k < n_; ++k) {
    const auto& al = alpha_[static_cast<std::size_t>(k)];
    // Expand the product over axes.
    std::vector<int> g(static_cast<std::size_t>(d), 0);
    while (true) {
      double c = 1.0;
      for (int a = 0; a < d; ++a) c *= uni[static_cast<std::size_t>(a)](al[static_cast<std::size_t>(a)], g[static_cast<std::size_t>(a)]);
      if (c != 0.0) out(k, pos.at(g)) += c;
      int a = 0;
      while (a < d && ++g[static_cast<std::size_t>(a)] > al[static_cast<std::size_t>(a)]) g[static_cast<std::size_t>(a++)] = 0;
      if (a == d) break;
    }
  }
  return out;
}

OrthoPolyBasis build_basis(const Measure& mu, int n) { return OrthoPolyBasis(mu, n); }

QuadratureRule gauss_jacobi(const JacobiWeight& w, int n) {
  if (n < 1) throw std::invalid_argument("Gauss rule needs n >= 1");
  const Recurrence r = jacobi_recurrence(w, n);
  VectorXd diag = r.a;
  VectorXd off(std::max(n - 1, 0));
  for (int k = 0; k + 1 < n; ++k) off[k] = std::sqrt(r.b[k + 1]);
  VectorXd x;
  if (n == 1) {
    x = diag;
  } else {
    Eigen::SelfAdjointEigenSolver<MatrixXd> es;
    es.computeFromTridiagonal(diag, off, Eigen::EigenvaluesOnly);
    if (es.info() != Eigen::Success) throw NumericalError("Jacobi matrix eigenvalues did not converge");
    x = es.eigenvalues();
  }
  std::vector<double> p(static_cast<std::size_t>(n + 1));
  QuadratureRule rule;
  rule.nodes.resize(n, 1);
  rule.weights.resize(n);
  for (int i = 0; i < n; ++i) {
    double xi = x[i];
    // Newton polish on p_n.
    for (int it = 0; it < 8; ++it) {
      double p0 = 1.0 / std::sqrt(r.mu0), p1 = 0.0, d0 = 0.0, d1 = 0.0;
      double pk = p0, dk = d0, pkm = 0.0, dkm = 0.0;
      for (int k = 0; k < n; ++k) {
        const double sb = k > 0 ? std::sqrt(r.b[k]) : 0.0;
        const double nb = std::sqrt(r.b[k + 1]);
        p1 = ((xi - r.a[k]) * pk - sb * pkm) / nb;
        d1 = (pk + (xi - r.a[k]) * dk - sb * dkm) / nb;
        pkm = pk;
        dkm = dk;
        pk = p1;
        dk = d1;
      }
      if (dk == 0.0) break;
      const double step = pk / dk;
      xi -= step;
      if (std::abs(step) < 1e-16 * std::max(1.0, std::abs(xi))) break;
    }
    if (!std::isfinite(xi) || std::abs(xi - x[i]) > 1e-6)
      throw NumericalError("Gauss node refinement did not converge");
    const Recurrence& rr = r;
    p[0] = 1.0 / std::sqrt(rr.mu0);
    double s = p[0] * p[0];
    if (n > 1) {
      p[1] = (xi - rr.a[0]) * p[0] / std::sqrt(rr.b[1]);
      s += p[1] * p[1];
      for (int k = 1; k + 1 < n; ++k) {
        p[static_cast<std::size_t>(k + 1)] =
            ((xi - rr.a[k]) * p[static_cast<std::size_t>(k)] - std::sqrt(rr.b[k]) * p[static_cast<std::size_t>(k - 1)]) /
            std::sqrt(rr.b[k + 1]);
        s += p[static_cast<std::size_t>(k + 1)] * p[static_cast<std::size_t>(k + 1)];
      }
    }
    rule.nodes(i, 0) = xi;
    rule.weights[i] = 1.0 / s;
  }
  return rule;
}

QuadratureRule gauss_rule_1d(const OrthoPolyBasis& basis, int n) {
  if (basis.dim() != 1) throw std::invalid_argument("gauss_rule_1d needs a univariate basis");
  return gauss_jacobi(basis.measure().axes[0], n);
}

OpeSampler::OpeSampler(const OrthoPolyBasis& basis, int grid_res) {
  const int d = basis.dim();
  if (grid_res < 1) throw std::invalid_argument("grid resolution must be >= 1");
  const double count = std::pow(static_cast<double>(grid_res), d);
  if (count > 1e7) throw std::invalid_argument("grid has more than 1e7 cells");
  if (count < basis.size()) throw std::invalid_argument("grid has fewer cells than basis functions");
  std::vector<QuadratureRule> axis;
  for (int a = 0; a < d; ++a) axis.push_back(gauss_jacobi(basis.measure().axes[static_cast<std::size_t>(a)], grid_res));
  const auto m = static_cast<Index>(count);
  atoms_.resize(m, d);
  VectorXd mass(m);
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  for (Index i = 0; i < m; ++i) {
    double w = 1.0;
    for (int a = 0; a < d; ++a) {
      atoms_(i, a) = axis[static_cast<std::size_t>(a)].nodes(idx[static_cast<std::size_t>(a)], 0);
      w *= axis[static_cast<std::size_t>(a)].weights[idx[static_cast<std::size_t>(a)]];
    }
    mass[i] = w;
    int a = 0;
    while (a < d && ++idx[static_cast<std::size_t>(a)] == grid_res) idx[static_cast<std::size_t>(a++)] = 0;
  }
  MatrixXd phi = basis.eval_many(atoms_);
  inv_kdiag_ = phi.rowwise().squaredNorm().cwiseInverse();
  features_ = mass.cwiseSqrt().asDiagonal() * phi;
  const Index n = basis.size();
  gram_error_ = (features_.transpose() * features_ - MatrixXd::Identity(n, n)).cwiseAbs().maxCoeff();
  if (gram_error_ > 1e-3)
    throw NumericalError("grid too coarse: discrete Gram matrix deviates from identity; increase grid_res");
  Eigen::HouseholderQR<MatrixXd> qr(features_);
  features_ = qr.householderQ() * MatrixXd::Identity(m, n);
}

QuadratureRule OpeSampler::sample(Rng& rng) const {
  const std::vector<Index> items = sample_projection_features(features_, rng);
  QuadratureRule rule;
  rule.nodes.resize(static_cast<Index>(items.size()), atoms_.cols());
  rule.weights.resize(static_cast<Index>(items.size()));
  for (std::size_t i = 0; i < items.size(); ++i) {
    rule.nodes.row(static_cast<Index>(i)) = atoms_.row(items[i]);
    rule.weights[static_cast<Index>(i)] = inv_kdiag_[items[i]];
  }
  return rule;
}

QuadratureRule ope_dpp_rule(const OrthoPolyBasis& basis, int grid_res, Rng& rng) {
  return OpeSampler(basis, grid_res).sample(rng);
}

double estimate(const QuadratureRule& rule, const TestFunction& f) {
  double s = 0.0;
  for (Index i = 0; i < rule.size(); ++i) {
    const double v = f(rule.nodes.row(i).transpose());
    if (!std::isfinite(v)) throw std::invalid_argument("integrand is not finite at a node");
    s += rule.weights[i] * v;
  }
  return s;
}

Proposal uniform_proposal(int d) {
  if (d < 1) throw std::invalid_argument("dimension must be >= 1");
  Proposal p;
  const double dens = std::pow(0.5, d);
  p.density = [d, dens](const VectorXd& x) {
    for (int a = 0; a < d; ++a)
      if (x[a] < -1.0 || x[a] > 1.0) return 0.0;
    return dens;
  };
  p.draw = [d](Rng& rng) {
    VectorXd x(d);
    for (int a = 0; a < d; ++a) x[a] = rng.uniform(-1.0, 1.0);
    return x;
  };
  return p;
}

QuadratureRule importance_rule(const Proposal& q, int m, const Measure& mu, Rng& rng) {
  if (m < 1) throw std::invalid_argument("importance rule needs m >= 1");
  QuadratureRule rule;
  rule.nodes.resize(m, mu.dim());
  rule.weights.resize(m);
  for (int i = 0; i < m; ++i) {
    const VectorXd x = q.draw(rng);
    const double qx = q.density(x);
    if (!(qx > 0.0)) throw std::invalid_argument("proposal density vanishes at a drawn node");
    rule.nodes.row(i) = x.transpose();
    rule.weights[i] = mu.density(x) / (m * qx);
  }
  return rule;
}

QuadMethod quad_method_from_string(const std::string& s) {
  if (s == "gauss") return QuadMethod::Gauss;
  if (s == "iid") return QuadMethod::Iid;
  if (s == "dpp") return QuadMethod::Dpp;
  throw std::invalid_argument("unknown quadrature method: " + s);
}

std::vector<VarianceRow> variance_sweep(QuadMethod method, const Measure& mu, const TestFunction& f,
                                        const std::vector<int>& n_list, int replicates, Rng& rng,
                                        const SweepOptions& opt) {
  if (replicates < 100) throw std::invalid_argument("variance sweep needs at least 100 replicates");
  const int d = mu.dim();
  const int grid = opt.grid_res > 0 ? opt.grid_res : (d == 1 ? 4096 : 256);
  std::vector<VarianceRow> rows;
  for (std::size_t t = 0; t < n_list.size(); ++t) {
    const int n = n_list[t];
    Rng base = rng.split(t);
    std::vector<double> est(static_cast<std::size_t>(replicates));
    if (method == QuadMethod::Gauss) {
      const double v = estimate(gauss_rule_1d(build_basis(mu, n), n), f);
      std::fill(est.begin(), est.end(), v);
    } else if (method == QuadMethod::Iid) {
      const Proposal q = uniform_proposal(d);
      for (int r = 0; r < replicates; ++r) {
        Rng rr = base.split(static_cast<std::uint64_t>(r));
        est[static_cast<std::size_t>(r)] = estimate(importance_rule(q, n, mu, rr), f);
      }
    } else {
      const OpeSampler sampler(build_basis(mu, n), grid);
      for (int r = 0; r < replicates; ++r) {
        Rng rr = base.split(static_cast<std::uint64_t>(r));
        est[static_cast<std::size_t>(r)] = estimate(sampler.sample(rr), f);
      }
    }
    VarianceRow row;
    row.n = n;
    double s = 0.0;
    for (double v : est) s += v;
    row.mean = s / replicates;
    double ss = 0.0;
    for (double v : est) ss += (v - row.mean) * (v - row.mean);
    row.variance = ss / (replicates - 1);
    rows.push_back(row);
  }
  return rows;
}

TestFunction named_test_function(const std::string& name) {
  if (name == "bump")
    return [](const VectorXd& x) {
      double v = 1.0;
      for (Index a = 0; a < x.size(); ++a) v *= (1.0 - x[a] * x[a]) * (1.0 - x[a] * x[a]);
      return v;
    };
  if (name == "square") return [](const VectorXd& x) { return x.squaredNorm(); };
  if (name == "cosine")
    return [](const VectorXd& x) {
      double v = 1.0;
      for (Index a = 0; a < x.size(); ++a) v *= std::cos(0.5 * std::numbers::pi * x[a]);
      return v;
    };
  if (name == "linear") return [](const VectorXd& x) { return x.sum(); };
  throw std::invalid_argument("unknown test function: " + name);
}

}  // namespace negdep
