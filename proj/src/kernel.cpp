#include "negdep/kernel.hpp"

#include <cmath>
#include <mutex>

namespace negdep {

struct KernelMatrix::Cache {
  std::once_flag once;
  Spectrum spectrum;
  bool ready = false;
};

const char* to_string(KernelKind kind) {
  return kind == KernelKind::Marginal ? "marginal" : "likelihood";
}

KernelKind kernel_kind_from_string(const std::string& s) {
  if (s == "marginal" || s == "Marginal" || s == "K") return KernelKind::Marginal;
  if (s == "likelihood" || s == "Likelihood" || s == "L") return KernelKind::Likelihood;
  throw std::invalid_argument("unknown kernel kind: " + s);
}

KernelMatrix::KernelMatrix(MatrixXc entries, KernelKind kind, bool hermitian)
    : entries_(std::move(entries)), kind_(kind), hermitian_(hermitian),
      cache_(std::make_shared<Cache>()) {
  if (entries_.rows() != entries_.cols())
    throw std::invalid_argument("kernel must be square");
  if (!entries_.allFinite()) throw std::invalid_argument("kernel has non-finite entries");
  real_ = entries_.imag().cwiseAbs().maxCoeff() == 0.0 || entries_.size() == 0;
  if (hermitian_ && entries_.size() > 0) {
    const double scale = std::max(1.0, entries_.cwiseAbs().maxCoeff());
    const double asym = (entries_ - entries_.adjoint()).cwiseAbs().maxCoeff();
    if (asym > 1e-12 * scale)
      throw std::invalid_argument("kernel flagged hermitian but entries are not");
  }
}

KernelMatrix KernelMatrix::from_real(const MatrixXd& entries, KernelKind kind, bool hermitian) {
  return KernelMatrix(entries.cast<cplx>(), kind, hermitian);
}

const Spectrum& KernelMatrix::spectrum() const {
  if (!hermitian_) throw std::invalid_argument("spectrum requested for non-hermitian kernel");
  if (!cache_) throw std::invalid_argument("empty kernel");
  std::call_once(cache_->once, [this] {
    Spectrum s;
    if (real_) {
      MatrixXd a = entries_.real();
      a = 0.5 * (a + a.transpose());
      Eigen::SelfAdjointEigenSolver<MatrixXd> es(a);
      if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
      s.values = es.eigenvalues();
      s.vectors = es.eigenvectors().cast<cplx>();
    } else {
      MatrixXc a = 0.5 * (entries_ + entries_.adjoint());
      Eigen::SelfAdjointEigenSolver<MatrixXc> es(a);
      if (es.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");
      s.values = es.eigenvalues();
      s.vectors = es.eigenvectors();
    }
    cache_->spectrum = std::move(s);
    cache_->ready = true;
  });
  return cache_->spectrum;
}

bool KernelMatrix::has_spectrum() const { return cache_ && cache_->ready; }

ValidityReport validate(const KernelMatrix& k) {
  ValidityReport r;
  if (k.size() == 0) {
    r.valid = true;
    return r;
  }
  if (!k.hermitian()) {
    Eigen::ComplexEigenSolver<MatrixXc> es(k.entries(), false);
    r.min_eig = es.eigenvalues().real().minCoeff();
    r.max_eig = es.eigenvalues().real().maxCoeff();
    r.valid = true;
    return r;
  }
  const Spectrum& s = k.spectrum();
  r.min_eig = s.values.minCoeff();
  r.max_eig = s.values.maxCoeff();
  if (r.min_eig < -kEigTol) {
    r.violated_rule = "eigenvalue below 0";
  } else if (k.kind() == KernelKind::Marginal && r.max_eig > 1.0 + kEigTol) {
    r.violated_rule = "marginal kernel eigenvalue above 1";
  }
  r.valid = !r.violated_rule.has_value();
  return r;
}

VectorXd clamped_eigenvalues(const KernelMatrix& k) {
  const Spectrum& s = k.spectrum();
  VectorXd v = s.values;
  for (Index i = 0; i < v.size(); ++i) {
    if (v[i] < -kEigTol) throw std::invalid_argument("kernel has a negative eigenvalue");
    v[i] = std::max(v[i], 0.0);
    if (k.kind() == KernelKind::Marginal) {
      if (v[i] > 1.0 + kEigTol) throw std::invalid_argument("marginal kernel eigenvalue above 1");
      v[i] = std::min(v[i], 1.0);
    }
  }
  return v;
}

namespace {

MatrixXc spectral_map(const KernelMatrix& k, const VectorXd& mapped) {
  const MatrixXc& u = k.spectrum().vectors;
  MatrixXc out = u * mapped.cast<cplx>().asDiagonal() * u.adjoint();
  return 0.5 * (out + out.adjoint());
}

MatrixXc maybe_real(MatrixXc m, bool real) {
  if (real) m = m.real().cast<cplx>();
  return m;
}

}  // namespace

KernelMatrix l_to_marginal(const KernelMatrix& l) {
  if (l.kind() != KernelKind::Likelihood)
    throw std::invalid_argument("l_to_marginal expects a likelihood kernel");
  const Index n = l.size();
  if (!l.hermitian()) {
    const MatrixXc eye = MatrixXc::Identity(n, n);
    MatrixXc k = eye - (eye + l.entries()).partialPivLu().solve(eye);
    return KernelMatrix(std::move(k), KernelKind::Marginal, false);
  }
  VectorXd lam = clamped_eigenvalues(l);
  for (Index i = 0; i < n; ++i) lam[i] = lam[i] / (1.0 + lam[i]);
  return KernelMatrix(maybe_real(spectral_map(l, lam), l.is_real()), KernelKind::Marginal, true);
}

KernelMatrix marginal_to_l(const KernelMatrix& k) {
  if (k.kind() != KernelKind::Marginal)
    throw std::invalid_argument("marginal_to_l expects a marginal kernel");
  const Index n = k.size();
  if (!k.hermitian()) {
    const MatrixXc eye = MatrixXc::Identity(n, n);
    Eigen::PartialPivLU<MatrixXc> lu(eye - k.entries());
    if (std::abs(lu.determinant()) < 1e-12)
      throw std::invalid_argument("I - K is singular; use the projection sampler");
    return KernelMatrix(k.entries() * lu.inverse(), KernelKind::Likelihood, false);
  }
  VectorXd mu = clamped_eigenvalues(k);
  for (Index i = 0; i < n; ++i) {
    if (mu[i] > 1.0 - 1e-8)
      throw std::invalid_argument(
          "marginal kernel has eigenvalue at or near 1; no likelihood form exists");
    mu[i] = mu[i] / (1.0 - mu[i]);
  }
  return KernelMatrix(maybe_real(spectral_map(k, mu), k.is_real()), KernelKind::Likelihood, true);
}

namespace {

template <class M>
void check_orthonormal_rows(const M& v) {
  if (!v.allFinite()) throw std::invalid_argument("projection rows contain non-finite values");
  const Index k = v.rows();
  if (k > v.cols()) throw std::invalid_argument("more orthonormal rows than columns");
  const double err = (v * v.adjoint() - M::Identity(k, k)).cwiseAbs().maxCoeff();
  if (k > 0 && err > 1e-10)
    throw std::invalid_argument("projection rows are not orthonormal");
}

}  // namespace

KernelMatrix projection_from_rows(const MatrixXd& v) {
  check_orthonormal_rows(v);
  MatrixXd k = v.transpose() * v;
  k = 0.5 * (k + k.transpose());
  return KernelMatrix::from_real(k, KernelKind::Marginal, true);
}

KernelMatrix projection_from_rows(const MatrixXc& v) {
  check_orthonormal_rows(v);
  MatrixXc k = v.adjoint() * v;
  k = 0.5 * (k + k.adjoint());
  return KernelMatrix(std::move(k), KernelKind::Marginal, true);
}

KernelMatrix rbf_kernel(const MatrixXd& points, double beta, double ridge) {
  if (!(beta > 0.0)) throw std::invalid_argument("rbf_kernel: beta must be positive");
  if (!(ridge >= 0.0)) throw std::invalid_argument("rbf_kernel: ridge must be nonnegative");
  if (!points.allFinite()) throw std::invalid_argument("rbf_kernel: non-finite points");
  const Index n = points.rows();
  MatrixXd l(n, n);
  for (Index i = 0; i < n; ++i) {
    l(i, i) = 1.0 + ridge;
    for (Index j = 0; j < i; ++j) {
      const double d2 = (points.row(i) - points.row(j)).squaredNorm();
      l(i, j) = l(j, i) = std::exp(-beta * d2);
    }
  }
  return KernelMatrix::from_real(l, KernelKind::Likelihood, true);
}

double idempotency_error(const KernelMatrix& k) {
  if (k.size() == 0) return 0.0;
  const MatrixXc& e = k.entries();
  return (e * e - e).cwiseAbs().maxCoeff();
}

LowRankFactor::LowRankFactor(MatrixXd b) : B(std::move(b)) {
  if (!B.allFinite()) throw std::invalid_argument("low-rank factor has non-finite entries");
  if (B.rows() > B.cols()) throw std::invalid_argument("low-rank factor needs r <= N");
}

KernelMatrix LowRankFactor::likelihood() const {
  MatrixXd l = B.transpose() * B;
  l = 0.5 * (l + l.transpose());
  return KernelMatrix::from_real(l, KernelKind::Likelihood, true);
}

}  // namespace negdep
