#include "negdep/quantum.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <stdexcept>

#include "negdep/kernel.hpp"

namespace negdep {

namespace {

void check_modes(int modes) {
  if (modes < 1 || modes > kMaxQubits) throw std::invalid_argument("quantum: mode count must lie in [1, 14]");
}

void check_state(const StateVector& s) {
  check_modes(s.modes);
  if (s.amp.size() != (Index{1} << s.modes)) throw std::invalid_argument("quantum: state size is not 2^N");
}

// Parity of the occupations below mode i.
double jw_sign(std::uint64_t n, int i) {
  return std::popcount(n & ((std::uint64_t{1} << i) - 1)) % 2 == 0 ? 1.0 : -1.0;
}

// Adds coeff * a_i^* (or a_i) applied to `in` into `out`.
void accumulate(const VectorXc& in, int i, bool dagger, cplx coeff, VectorXc& out) {
  const std::uint64_t bit = std::uint64_t{1} << i;
  for (std::uint64_t n = 0; n < static_cast<std::uint64_t>(in.size()); ++n) {
    const cplx a = in(static_cast<Index>(n));
    if (a == 0.0) continue;
    const bool occupied = (n & bit) != 0;
    if (occupied == dagger) continue;
    out(static_cast<Index>(n ^ bit)) += coeff * jw_sign(n, i) * a;
  }
}

MatrixXc op_to_matrix(int modes, const std::vector<std::pair<int, cplx>>& terms, bool dagger) {
  const Index dim = Index{1} << modes;
  MatrixXc m = MatrixXc::Zero(dim, dim);
  for (Index col = 0; col < dim; ++col) {
    const auto n = static_cast<std::uint64_t>(col);
    for (const auto& [i, c] : terms) {
      const std::uint64_t bit = std::uint64_t{1} << i;
      const bool occupied = (n & bit) != 0;
      if (occupied == dagger) continue;
      m(static_cast<Index>(n ^ bit), col) += c * jw_sign(n, i);
    }
  }
  return m;
}

double anticomm_residual(const MatrixXc& a, const MatrixXc& b, bool identity) {
  MatrixXc r = a * b + b * a;
  if (identity) r -= MatrixXc::Identity(r.rows(), r.cols());
  return r.cwiseAbs().maxCoeff();
}

CarResiduals residuals_of(const std::vector<MatrixXc>& ann, const std::vector<MatrixXc>& cre) {
  CarResiduals out;
  const std::size_t n = ann.size();
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) {
      out.annihilators = std::max(out.annihilators, anticomm_residual(ann[i], ann[j], false));
      out.creators = std::max(out.creators, anticomm_residual(cre[i], cre[j], false));
      out.mixed = std::max(out.mixed, anticomm_residual(ann[i], cre[j], i == j));
    }
  return out;
}

}  // namespace

StateVector StateVector::vacuum(int modes) { return basis(modes, 0); }

StateVector StateVector::basis(int modes, std::uint64_t occupation) {
  check_modes(modes);
  if (occupation >> modes) throw std::invalid_argument("quantum: occupation has bits beyond N");
  StateVector s;
  s.modes = modes;
  s.amp = VectorXc::Zero(Index{1} << modes);
  s.amp(static_cast<Index>(occupation)) = 1.0;
  return s;
}

StateVector apply_jw(const FermionOp& op, const StateVector& state) {
  check_state(state);
  if (op.mode < 0 || op.mode >= state.modes) throw std::invalid_argument("apply_jw: mode index out of range");
  StateVector out{state.modes, VectorXc::Zero(state.amp.size())};
  accumulate(state.amp, op.mode, op.dagger, 1.0, out.amp);
  return out;
}

StateVector apply_creation_combination(const VectorXc& coeffs, const StateVector& state) {
  check_state(state);
  if (coeffs.size() != state.modes) throw std::invalid_argument("apply_creation_combination: need N coefficients");
  StateVector out{state.modes, VectorXc::Zero(state.amp.size())};
  for (int j = 0; j < state.modes; ++j)
    if (coeffs(j) != 0.0) accumulate(state.amp, j, true, coeffs(j), out.amp);
  return out;
}

MatrixXc jw_matrix(const FermionOp& op, int modes) {
  check_modes(modes);
  if (op.mode < 0 || op.mode >= modes) throw std::invalid_argument("jw_matrix: mode index out of range");
  return op_to_matrix(modes, {{op.mode, 1.0}}, op.dagger);
}

MatrixXc rotated_matrix(const MatrixXc& V, int k, bool dagger) {
  const int modes = static_cast<int>(V.cols());
  check_modes(modes);
  if (k < 0 || k >= V.rows()) throw std::invalid_argument("rotated_matrix: row index out of range");
  std::vector<std::pair<int, cplx>> terms;
  for (int j = 0; j < modes; ++j) terms.emplace_back(j, dagger ? V(k, j) : std::conj(V(k, j)));
  return op_to_matrix(modes, terms, dagger);
}

double CarResiduals::max() const { return std::max({annihilators, creators, mixed}); }

CarResiduals car_residuals(int modes) {
  if (modes < 1 || modes > 6) throw std::invalid_argument("car_residuals: N must lie in [1, 6]");
  std::vector<MatrixXc> ann, cre;
  for (int i = 0; i < modes; ++i) {
    ann.push_back(jw_matrix({i, false}, modes));
    cre.push_back(jw_matrix({i, true}, modes));
  }
  return residuals_of(ann, cre);
}

CarResiduals car_residuals(const MatrixXc& V) {
  const int modes = static_cast<int>(V.cols());
  if (modes < 1 || modes > 6) throw std::invalid_argument("car_residuals: N must lie in [1, 6]");
  check_unitary(V);
  std::vector<MatrixXc> ann, cre;
  for (int k = 0; k < modes; ++k) {
    ann.push_back(rotated_matrix(V, k, false));
    cre.push_back(rotated_matrix(V, k, true));
  }
  return residuals_of(ann, cre);
}

MatrixXc haar_unitary(int n, Rng& rng) {
  if (n < 1) throw std::invalid_argument("haar_unitary: n must be positive");
  MatrixXc g(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) g(i, j) = rng.complex_normal();
  Eigen::HouseholderQR<MatrixXc> qr(g);
  MatrixXc q = qr.householderQ() * MatrixXc::Identity(n, n);
  const MatrixXc r = qr.matrixQR().triangularView<Eigen::Upper>();
  for (int j = 0; j < n; ++j) {
    const double m = std::abs(r(j, j));
    if (m > 0.0) q.col(j) *= r(j, j) / m;
  }
  return q;
}

void check_unitary(const MatrixXc& V, double tol) {
  if (V.rows() != V.cols()) throw std::invalid_argument("unitary matrix must be square");
  if (!V.allFinite()) throw std::invalid_argument("unitary matrix has non-finite entries");
  const double err = (V * V.adjoint() - MatrixXc::Identity(V.rows(), V.cols())).cwiseAbs().maxCoeff();
  if (err > tol) throw std::invalid_argument("matrix is not unitary (deviation " + std::to_string(err) + ")");
}

StateVector prepare_slater(const MatrixXc& V, int r) {
  check_modes(static_cast<int>(V.cols()));
  check_unitary(V);
  const int modes = static_cast<int>(V.cols());
  if (r < 1 || r > modes) throw std::invalid_argument("prepare_slater: r must lie in [1, N]");
  StateVector s = StateVector::vacuum(modes);
  // b_k^* = sum_j V_kj a_j^*, applied right to left.
  for (int k = r - 1; k >= 0; --k) s = apply_creation_combination(V.row(k).transpose(), s);
  return s;
}

SubsetDistribution occupation_distribution(const StateVector& state) {
  check_state(state);
  const double n2 = state.amp.squaredNorm();
  if (std::abs(n2 - 1.0) > 1e-10) throw std::invalid_argument("occupation_distribution: state is not normalized");
  std::vector<double> p(static_cast<std::size_t>(state.amp.size()));
  for (Index i = 0; i < state.amp.size(); ++i) p[static_cast<std::size_t>(i)] = std::norm(state.amp(i)) / n2;
  return SubsetDistribution(state.modes, std::move(p));
}

SubsetDistribution classical_projection_law(const MatrixXc& V, int r) {
  if (r < 1 || r > V.rows()) throw std::invalid_argument("classical_projection_law: r must lie in [1, N]");
  return brute_force_distribution(projection_from_rows(MatrixXc(V.topRows(r))));
}

std::uint64_t measure(const StateVector& state, Rng& rng) { return measure_many(state, 1, rng)[0]; }

std::vector<std::uint64_t> measure_many(const StateVector& state, Index reps, Rng& rng) {
  if (reps < 0) throw std::invalid_argument("measure_many: reps must be nonnegative");
  const std::vector<double> p = occupation_distribution(state).probabilities();
  std::vector<double> cdf(p.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) cdf[i] = (acc += p[i]);
  std::vector<std::uint64_t> out(static_cast<std::size_t>(reps));
  for (auto& x : out) {
    const double u = rng.uniform() * acc;
    // First index with cdf > u; its probability is positive.
    const auto it = std::upper_bound(cdf.begin(), cdf.end(), u);
    x = static_cast<std::uint64_t>(std::min<std::ptrdiff_t>(it - cdf.begin(), static_cast<std::ptrdiff_t>(cdf.size()) - 1));
  }
  return out;
}

}  // namespace negdep
