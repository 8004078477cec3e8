#ifndef NEGDEP_QUANTUM_HPP
#define NEGDEP_QUANTUM_HPP

#include <cstdint>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/random.hpp"
#include "negdep/sampler.hpp"

namespace negdep {

constexpr int kMaxQubits = 14;

/// Amplitudes over the Fock basis; bit i of the index is the occupation of mode i.
struct StateVector {
  int modes = 0;
  VectorXc amp;

  static StateVector vacuum(int modes);
  static StateVector basis(int modes, std::uint64_t occupation);
  double norm() const { return amp.norm(); }
};

/// c_i (dagger = false) or c_i^* realized on qubits: parity string over modes < i.
struct FermionOp {
  int mode = 0;
  bool dagger = false;
};

StateVector apply_jw(const FermionOp& op, const StateVector& state);

/// sum_j coeffs_j a_j^*.
StateVector apply_creation_combination(const VectorXc& coeffs, const StateVector& state);

/// 2^N x 2^N matrix of a single Jordan-Wigner operator.
MatrixXc jw_matrix(const FermionOp& op, int modes);

/// b_k = sum_j conj(V_kj) a_j as a dense matrix (dagger gives b_k^*).
MatrixXc rotated_matrix(const MatrixXc& V, int k, bool dagger);

struct CarResiduals {
  double annihilators = 0.0;  // max ||{c_i, c_j}||
  double creators = 0.0;      // max ||{c_i^*, c_j^*}||
  double mixed = 0.0;         // max ||{c_i, c_j^*} - delta_ij I||
  double max() const;
};

/// Max-entry residuals of the anticommutation relations over all pairs, N <= 6.
/// With V given the rotated operators b_k are checked instead.
CarResiduals car_residuals(int modes);
CarResiduals car_residuals(const MatrixXc& V);

/// Haar-distributed unitary (QR of a complex Gaussian matrix with phase fix).
MatrixXc haar_unitary(int n, Rng& rng);

/// Throws std::invalid_argument when ||V V^H - I|| exceeds tol.
void check_unitary(const MatrixXc& V, double tol = 1e-10);

/// b_1^* ... b_r^* |0>.
StateVector prepare_slater(const MatrixXc& V, int r);

/// Law of the measured occupation set. Throws when the norm is off by more than 1e-10.
SubsetDistribution occupation_distribution(const StateVector& state);

/// Projection DPP with K = V_{[r],:}^H V_{[r],:}.
SubsetDistribution classical_projection_law(const MatrixXc& V, int r);

/// One measurement of all occupation numbers.
std::uint64_t measure(const StateVector& state, Rng& rng);

/// reps i.i.d. measurements sharing one cumulative table.
std::vector<std::uint64_t> measure_many(const StateVector& state, Index reps, Rng& rng);

}  // namespace negdep

#endif
