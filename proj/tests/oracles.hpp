// Independent reference computations shared by the unit tests.
#ifndef NEGDEP_TESTS_ORACLES_HPP
#define NEGDEP_TESTS_ORACLES_HPP

#include <bit>
#include <cmath>
#include <vector>

#include <Eigen/Dense>

#include "negdep/random.hpp"

namespace oracle {

inline Eigen::MatrixXd random_psd(int n, negdep::Rng& rng, int rank = -1, double scale = 1.0) {
  if (rank < 0) rank = n;
  Eigen::MatrixXd b(rank, n);
  for (int i = 0; i < rank; ++i)
    for (int j = 0; j < n; ++j) b(i, j) = rng.normal();
  return scale * b.transpose() * b / std::max(rank, 1);
}

inline Eigen::MatrixXd random_orthonormal_rows(int k, int n, negdep::Rng& rng) {
  Eigen::MatrixXd a(n, k);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < k; ++j) a(i, j) = rng.normal();
  Eigen::HouseholderQR<Eigen::MatrixXd> qr(a);
  Eigen::MatrixXd q = qr.householderQ() * Eigen::MatrixXd::Identity(n, k);
  return q.transpose();
}

inline Eigen::MatrixXcd random_unitary(int n, negdep::Rng& rng) {
  Eigen::MatrixXcd a(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) a(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<Eigen::MatrixXcd> qr(a);
  return qr.householderQ() * Eigen::MatrixXcd::Identity(n, n);
}

/// L-ensemble law by explicit principal minors, written independently of
/// the library: cofactor-free Gaussian elimination determinant.
inline double det_by_elimination(Eigen::MatrixXd m) {
  const int n = static_cast<int>(m.rows());
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int p = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(p, c))) p = r;
    if (m(p, c) == 0.0) return 0.0;
    if (p != c) {
      m.row(p).swap(m.row(c));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < n; ++r) m.row(r) -= m(r, c) / m(c, c) * m.row(c);
  }
  return det;
}

inline std::vector<double> l_ensemble_law(const Eigen::MatrixXd& l) {
  const int n = static_cast<int>(l.rows());
  std::vector<double> p(std::size_t{1} << n);
  double z = 0.0;
  for (std::size_t mask = 0; mask < p.size(); ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1U) idx.push_back(i);
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = l(idx[a], idx[b]);
    p[mask] = idx.empty() ? 1.0 : std::max(det_by_elimination(sub), 0.0);
    z += p[mask];
  }
  for (double& v : p) v /= z;
  return p;
}

/// Marginal-kernel law via inclusion-exclusion over P(A subset of S) = det K_A.
inline std::vector<double> marginal_law(const Eigen::MatrixXd& k) {
  const int n = static_cast<int>(k.rows());
  const std::size_t total = std::size_t{1} << n;
  std::vector<double> incl(total);
  for (std::size_t mask = 0; mask < total; ++mask) {
    std::vector<int> idx;
    for (int i = 0; i < n; ++i)
      if (mask >> i & 1U) idx.push_back(i);
    Eigen::MatrixXd sub(idx.size(), idx.size());
    for (std::size_t a = 0; a < idx.size(); ++a)
      for (std::size_t b = 0; b < idx.size(); ++b) sub(a, b) = k(idx[a], idx[b]);
    incl[mask] = idx.empty() ? 1.0 : det_by_elimination(sub);
  }
  std::vector<double> p(total, 0.0);
  for (std::size_t a = 0; a < total; ++a) {
    double s = 0.0;
    for (std::size_t b = a;; b = (b + 1) | a) {
      const int extra = std::popcount(b) - std::popcount(a);
      s += (extra % 2 ? -1.0 : 1.0) * incl[b];
      if (b == total - 1) break;
    }
    p[a] = s;
  }
  return p;
}

}  // namespace oracle

#endif
