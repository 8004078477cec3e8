#include "negdep/sampler.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <numeric>

namespace negdep {

SubsetDistribution::SubsetDistribution(int n, std::vector<double> probs)
    : n_(n), p_(std::move(probs)) {
  if (n < 0 || n > 30) throw std::invalid_argument("subset distribution supports n <= 30");
  if (p_.size() != (std::size_t{1} << n))
    throw std::invalid_argument("subset distribution needs 2^n probabilities");
  double s = 0.0;
  for (double v : p_) {
    if (v < -1e-12) throw std::invalid_argument("negative subset probability");
    s += v;
  }
  if (std::abs(s - 1.0) > 1e-10) throw std::invalid_argument("subset probabilities do not sum to 1");
}

SubsetDistribution SubsetDistribution::conditioned_on_size(int k) const {
  std::vector<double> q(p_.size(), 0.0);
  double z = 0.0;
  for (std::size_t m = 0; m < p_.size(); ++m)
    if (std::popcount(m) == k) z += p_[m];
  if (z <= 0.0) throw std::invalid_argument("conditioning on a size with zero probability");
  for (std::size_t m = 0; m < p_.size(); ++m)
    if (std::popcount(m) == k) q[m] = p_[m] / z;
  return SubsetDistribution(n_, std::move(q));
}

VectorXd SubsetDistribution::marginals() const {
  VectorXd m = VectorXd::Zero(n_);
  for (std::size_t s = 0; s < p_.size(); ++s)
    for (int i = 0; i < n_; ++i)
      if (s >> i & 1U) m[i] += p_[s];
  return m;
}

std::vector<double> SubsetDistribution::cardinality() const {
  std::vector<double> c(n_ + 1, 0.0);
  for (std::size_t s = 0; s < p_.size(); ++s) c[std::popcount(s)] += p_[s];
  return c;
}

std::uint64_t to_mask(const std::vector<Index>& items) {
  std::uint64_t m = 0;
  for (Index i : items) {
    if (i < 0 || i >= 64) throw std::invalid_argument("to_mask: index out of range");
    m |= std::uint64_t{1} << i;
  }
  return m;
}

std::vector<Index> from_mask(std::uint64_t mask) {
  std::vector<Index> out;
  for (Index i = 0; mask; ++i, mask >>= 1)
    if (mask & 1U) out.push_back(i);
  return out;
}

namespace {

constexpr double kZeroMass = 1e-14;

Index draw_index(const VectorXd& w, Rng& rng) {
  double total = 0.0;
  for (Index i = 0; i < w.size(); ++i)
    if (w[i] >= kZeroMass) total += w[i];
  if (!(total > 0.0)) throw NumericalError("chain rule ran out of probability mass");
  const double u = rng.uniform() * total;
  double acc = 0.0;
  Index last = -1;
  for (Index i = 0; i < w.size(); ++i) {
    if (w[i] < kZeroMass) continue;
    acc += w[i];
    last = i;
    if (u < acc) return i;
  }
  return last;
}

template <class Mat>
std::vector<Index> chain_rule(const Mat& u, Rng& rng) {
  using Vec = Eigen::Matrix<typename Mat::Scalar, Eigen::Dynamic, 1>;
  const Index m = u.cols();
  VectorXd norms2 = u.rowwise().squaredNorm();
  Mat basis(m, m);
  std::vector<Index> out;
  out.reserve(static_cast<std::size_t>(m));
  for (Index t = 0; t < m; ++t) {
    const Index i = draw_index(norms2, rng);
    out.push_back(i);
    Vec e = u.row(i).transpose();
    // Two Gram-Schmidt passes keep the residual orthogonal to working precision.
    for (int pass = 0; pass < 2 && t > 0; ++pass) {
      const Vec c = basis.leftCols(t).adjoint() * e;
      e -= basis.leftCols(t) * c;
    }
    const double nrm = e.norm();
    if (!(nrm > 1e-12)) throw NumericalError("chain rule residual vanished");
    e /= nrm;
    basis.col(t) = e;
    norms2 -= (u * e.conjugate()).cwiseAbs2();
    norms2[i] = 0.0;
  }
  std::sort(out.begin(), out.end());
  return out;
}

DppSample from_eigvecs(const KernelMatrix& k, const std::vector<Index>& cols, Rng& rng) {
  DppSample s;
  s.seed = rng.seed();
  if (cols.empty()) return s;
  const MatrixXc& v = k.spectrum().vectors;
  if (k.is_real()) {
    MatrixXd u(v.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) u.col(static_cast<Index>(c)) = v.col(cols[c]).real();
    s.items = chain_rule(u, rng);
  } else {
    MatrixXc u(v.rows(), static_cast<Index>(cols.size()));
    for (std::size_t c = 0; c < cols.size(); ++c) u.col(static_cast<Index>(c)) = v.col(cols[c]);
    s.items = chain_rule(u, rng);
  }
  return s;
}

}  // namespace

std::vector<Index> sample_projection_features(const MatrixXd& u, Rng& rng) {
  return chain_rule(u, rng);
}

std::vector<Index> sample_projection_features(const MatrixXc& u, Rng& rng) {
  return chain_rule(u, rng);
}

DppSample sample_projection(const KernelMatrix& k, Rng& rng) {
  if (!k.hermitian()) throw std::invalid_argument("projection sampler needs a hermitian kernel");
  if (idempotency_error(k) > 1e-8) throw std::invalid_argument("kernel is not a projection");
  const VectorXd& lam = k.spectrum().values;
  std::vector<Index> cols;
  for (Index j = 0; j < lam.size(); ++j)
    if (lam[j] > 0.5) cols.push_back(j);
  return from_eigvecs(k, cols, rng);
}

DppSample sample_spectral(const KernelMatrix& l, Rng& rng) {
  if (!l.hermitian()) throw std::invalid_argument("spectral sampler needs a hermitian kernel");
  const VectorXd lam = clamped_eigenvalues(l);
  std::vector<Index> cols;
  for (Index j = 0; j < lam.size(); ++j) {
    const double p = l.kind() == KernelKind::Likelihood ? lam[j] / (1.0 + lam[j]) : lam[j];
    if (rng.uniform() < p) cols.push_back(j);
  }
  return from_eigvecs(l, cols, rng);
}

Index numerical_rank(const VectorXd& lambda, double rel_tol) {
  if (lambda.size() == 0) return 0;
  const double mx = lambda.maxCoeff();
  if (mx <= 0.0) return 0;
  Index r = 0;
  for (Index i = 0; i < lambda.size(); ++i)
    if (lambda[i] > rel_tol * std::max(mx, 1.0)) ++r;
  return r;
}

VectorXd elementary_symmetric(const VectorXd& lambda, Index kmax) {
  VectorXd e = VectorXd::Zero(kmax + 1);
  e[0] = 1.0;
  for (Index n = 0; n < lambda.size(); ++n)
    for (Index l = std::min(kmax, n + 1); l >= 1; --l) e[l] += lambda[n] * e[l - 1];
  return e;
}

std::vector<Index> select_kdpp_eigenvectors(const VectorXd& lambda, Index k, Rng& rng) {
  const Index n = lambda.size();
  if (k < 0 || k > n) throw std::invalid_argument("k-DPP size out of range");
  if (k > numerical_rank(lambda)) throw std::invalid_argument("k exceeds the rank of L");
  const double scale = lambda.maxCoeff();
  const VectorXd lam = lambda / scale;
  // e(l, m) = e_l(lam_0..lam_{m-1})
  MatrixXd e = MatrixXd::Zero(k + 1, n + 1);
  e.row(0).setOnes();
  for (Index m = 1; m <= n; ++m)
    for (Index l = 1; l <= k; ++l) e(l, m) = e(l, m - 1) + lam[m - 1] * e(l - 1, m - 1);
  std::vector<Index> chosen;
  Index l = k;
  for (Index m = n; m >= 1 && l > 0; --m) {
    const double p = lam[m - 1] * e(l - 1, m - 1) / e(l, m);
    if (rng.uniform() < p) {
      chosen.push_back(m - 1);
      --l;
    }
  }
  if (l != 0) throw NumericalError("k-DPP eigenvector selection failed");
  std::reverse(chosen.begin(), chosen.end());
  return chosen;
}

DppSample sample_kdpp(const KernelMatrix& l, Index k, Rng& rng) {
  if (l.kind() != KernelKind::Likelihood)
    throw std::invalid_argument("k-DPP sampler expects a likelihood kernel");
  if (!l.hermitian()) throw std::invalid_argument("k-DPP sampler needs a hermitian kernel");
  const VectorXd lam = clamped_eigenvalues(l);
  return from_eigvecs(l, select_kdpp_eigenvectors(lam, k, rng), rng);
}

SubsetDistribution brute_force_distribution(const KernelMatrix& kern) {
  const Index n = kern.size();
  const bool marginal = kern.kind() == KernelKind::Marginal;
  if (marginal && n > 16) throw std::invalid_argument("marginal brute force supports N <= 16");
  if (n > 20) throw std::invalid_argument("brute force supports N <= 20");
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> p(total, 0.0);
  const MatrixXc& e = kern.entries();
  const bool real = kern.is_real();
  const MatrixXd er = real ? MatrixXd(e.real()) : MatrixXd();

  auto det_of = [&](std::uint64_t mask) -> cplx {
    if (marginal) {
      // P(S = A) = (-1)^{|A^c|} det(K - I_{A^c})
      const int sign = (n - std::popcount(mask)) % 2 == 0 ? 1 : -1;
      if (real) {
        MatrixXd m = er;
        for (Index i = 0; i < n; ++i)
          if (!(mask >> i & 1U)) m(i, i) -= 1.0;
        return sign * (n == 0 ? 1.0 : m.partialPivLu().determinant());
      }
      MatrixXc m = e;
      for (Index i = 0; i < n; ++i)
        if (!(mask >> i & 1U)) m(i, i) -= 1.0;
      return static_cast<double>(sign) * (n == 0 ? cplx(1.0) : m.partialPivLu().determinant());
    }
    const std::vector<Index> idx = from_mask(mask);
    const auto k = static_cast<Index>(idx.size());
    if (k == 0) return 1.0;
    if (real) {
      MatrixXd m(k, k);
      for (Index a = 0; a < k; ++a)
        for (Index b = 0; b < k; ++b) m(a, b) = er(idx[a], idx[b]);
      return m.partialPivLu().determinant();
    }
    MatrixXc m(k, k);
    for (Index a = 0; a < k; ++a)
      for (Index b = 0; b < k; ++b) m(a, b) = e(idx[a], idx[b]);
    return m.partialPivLu().determinant();
  };

  double z = 0.0;
  const double scale = std::max(1.0, e.size() ? e.cwiseAbs().maxCoeff() : 1.0);
  for (std::size_t m = 0; m < total; ++m) {
    const cplx d = det_of(m);
    const double tol = 1e-10 * std::pow(scale, marginal ? 0 : std::popcount(m));
    if (std::abs(d.imag()) > std::max(tol, 1e-10))
      throw std::invalid_argument("principal minor is not real");
    if (d.real() < -std::max(tol, 1e-10))
      throw std::invalid_argument("negative principal minor: kernel is not admissible");
    p[m] = std::max(d.real(), 0.0);
    z += p[m];
  }
  if (!(z > 0.0)) throw std::invalid_argument("kernel defines no probability mass");
  for (double& v : p) v /= z;
  return SubsetDistribution(static_cast<int>(n), std::move(p));
}

namespace {

struct ProbeAccumulator {
  std::vector<std::vector<double>> model, poisson;  // [eps][rep]
};

std::vector<RepulsionRow> summarise(const std::vector<double>& eps, const ProbeAccumulator& acc) {
  std::vector<RepulsionRow> rows;
  for (std::size_t e = 0; e < eps.size(); ++e) {
    RepulsionRow r;
    r.eps = eps[e];
    const auto& a = acc.model[e];
    const auto& b = acc.poisson[e];
    const double na = static_cast<double>(a.size());
    r.p_model = std::accumulate(a.begin(), a.end(), 0.0) / na;
    r.p_poisson = std::accumulate(b.begin(), b.end(), 0.0) / na;
    double va = 0.0, vb = 0.0;
    for (double v : a) va += (v - r.p_model) * (v - r.p_model);
    for (double v : b) vb += (v - r.p_poisson) * (v - r.p_poisson);
    if (na > 1) {
      r.se_model = std::sqrt(va / (na - 1) / na);
      r.se_poisson = std::sqrt(vb / (na - 1) / na);
    }
    rows.push_back(r);
  }
  return rows;
}

}  // namespace

std::vector<RepulsionRow> repulsion_probe(const PatternGenerator& model, double intensity,
                                          const std::vector<double>& eps, const Window& window,
                                          int replicates, Rng& rng) {
  if (eps.empty()) throw std::invalid_argument("repulsion_probe: empty eps list");
  if (replicates < 2) throw std::invalid_argument("repulsion_probe: need at least 2 replicates");
  if (!(intensity > 0.0)) throw std::invalid_argument("repulsion_probe: intensity must be positive");
  const double emin = *std::min_element(eps.begin(), eps.end());
  if (!(emin > 0.0)) throw std::invalid_argument("repulsion_probe: eps must be positive");
  const int d = window.dim();
  const double expected_pairs = replicates * 0.5 * intensity * intensity * window.volume() *
                                unit_ball_volume(d) * std::pow(2.0 * emin, d);
  if (expected_pairs < 10.0)
    throw std::invalid_argument("repulsion_probe: too few replicates for the smallest eps");

  ProbeAccumulator acc;
  acc.model.assign(eps.size(), {});
  acc.poisson.assign(eps.size(), {});
  for (int r = 0; r < replicates; ++r) {
    Rng rm = rng.split(2 * static_cast<std::uint64_t>(r));
    Rng rp = rng.split(2 * static_cast<std::uint64_t>(r) + 1);
    PointPattern pm = model(rm);
    pm.window = window;
    const PointPattern pp = sample_poisson(window, intensity, rp);
    for (std::size_t e = 0; e < eps.size(); ++e) {
      acc.model[e].push_back(pair_in_ball_fraction(pm, eps[e]));
      acc.poisson[e].push_back(pair_in_ball_fraction(pp, eps[e]));
    }
  }
  return summarise(eps, acc);
}

std::vector<RepulsionRow> repulsion_probe(const KernelMatrix& kern, const MatrixXd& locations,
                                          double cell, const std::vector<double>& eps,
                                          const Window& window, int replicates, Rng& rng) {
  if (locations.rows() != kern.size())
    throw std::invalid_argument("repulsion_probe: one location per kernel item required");
  const VectorXd lam = clamped_eigenvalues(kern);
  double expected = 0.0;
  for (Index i = 0; i < lam.size(); ++i)
    expected += kern.kind() == KernelKind::Likelihood ? lam[i] / (1.0 + lam[i]) : lam[i];
  const double intensity = expected / window.volume();
  PatternGenerator gen = [&](Rng& r) {
    const DppSample s = sample_spectral(kern, r);
    PointPattern p;
    p.window = window;
    p.points.resize(static_cast<Index>(s.items.size()), locations.cols());
    for (std::size_t i = 0; i < s.items.size(); ++i) {
      auto row = p.points.row(static_cast<Index>(i));
      row = locations.row(s.items[i]);
      for (Index a = 0; a < row.size(); ++a) row[a] += cell * (r.uniform() - 0.5);
    }
    return p;
  };
  return repulsion_probe(gen, intensity, eps, window, replicates, rng);
}

}  // namespace negdep
