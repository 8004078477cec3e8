#ifndef NEGDEP_COMMON_HPP
#define NEGDEP_COMMON_HPP

#include <complex>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace negdep {

using cplx = std::complex<double>;
using MatrixXc = Eigen::MatrixXcd;
using VectorXc = Eigen::VectorXcd;
using Eigen::MatrixXd;
using Eigen::VectorXd;
using Index = Eigen::Index;

/// Raised when a computation is well-posed but numerically fails
/// (singular update, divergence, too-coarse discretization).
/// Input validation problems use std::invalid_argument.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

inline const char* version() { return NEGDEP_VERSION; }

}  // namespace negdep

#endif
