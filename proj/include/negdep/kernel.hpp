#ifndef NEGDEP_KERNEL_HPP
#define NEGDEP_KERNEL_HPP

#include <memory>
#include <optional>
#include <string>

#include "negdep/common.hpp"

namespace negdep {

enum class KernelKind { Marginal, Likelihood };

const char* to_string(KernelKind kind);
KernelKind kernel_kind_from_string(const std::string& s);

struct Spectrum {
  VectorXd values;   // ascending
  MatrixXc vectors;  // columns
};

/// Dense complex kernel with a kind tag. Entries are immutable; the spectrum
/// is computed once on first request and shared between copies.
class KernelMatrix {
 public:
  KernelMatrix() = default;
  KernelMatrix(MatrixXc entries, KernelKind kind, bool hermitian);
  static KernelMatrix from_real(const MatrixXd& entries, KernelKind kind, bool hermitian = true);

  Index size() const { return entries_.rows(); }
  KernelKind kind() const { return kind_; }
  bool hermitian() const { return hermitian_; }
  bool is_real() const { return real_; }
  const MatrixXc& entries() const { return entries_; }
  MatrixXd real_entries() const { return entries_.real(); }

  /// Eigendecomposition of a Hermitian kernel. Throws for non-Hermitian ones.
  const Spectrum& spectrum() const;
  bool has_spectrum() const;

 private:
  struct Cache;
  MatrixXc entries_;
  KernelKind kind_ = KernelKind::Likelihood;
  bool hermitian_ = true;
  bool real_ = true;
  std::shared_ptr<Cache> cache_;
};

struct ValidityReport {
  bool valid = false;
  double min_eig = 0.0;
  double max_eig = 0.0;
  std::optional<std::string> violated_rule;
};

/// Spectral admissibility (eigenvalue tolerance 1e-10). Non-Hermitian kernels
/// are only checked for finiteness; min/max_eig then report real parts.
ValidityReport validate(const KernelMatrix& k);

constexpr double kEigTol = 1e-10;

/// Eigenvalues clamped into the admissible interval of the kernel kind.
VectorXd clamped_eigenvalues(const KernelMatrix& k);

KernelMatrix l_to_marginal(const KernelMatrix& l);
KernelMatrix marginal_to_l(const KernelMatrix& k);

/// K = V^T V for real V with orthonormal rows.
KernelMatrix projection_from_rows(const MatrixXd& v);
/// K = V^H V for complex V with orthonormal rows.
KernelMatrix projection_from_rows(const MatrixXc& v);

/// Gaussian similarity L_ij = exp(-beta |x_i - x_j|^2) + ridge delta_ij. Rows are points.
KernelMatrix rbf_kernel(const MatrixXd& points, double beta, double ridge);

/// Max-entry deviation of K^2 from K.
double idempotency_error(const KernelMatrix& k);

struct LowRankFactor {
  MatrixXd B;  // r x N, columns b_j

  explicit LowRankFactor(MatrixXd b);
  Index rank() const { return B.rows(); }
  Index items() const { return B.cols(); }
  MatrixXd dual() const { return B * B.transpose(); }
  KernelMatrix likelihood() const;
};

}  // namespace negdep

#endif
