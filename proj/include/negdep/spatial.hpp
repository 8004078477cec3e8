#ifndef NEGDEP_SPATIAL_HPP
#define NEGDEP_SPATIAL_HPP

#include <functional>
#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/point_pattern.hpp"
#include "negdep/random.hpp"

namespace negdep {

/// Throws unless sigma is symmetric (1e-12 relative) and positive definite.
void validate_scattering(const MatrixXd& sigma);

/// (2 pi) Sigma = (1 + lambda)^(-1/(d-1)) (I - u u^T) + (1 + lambda) u u^T.
MatrixXd spiked_sigma(double lambda, const VectorXd& u, int d);

/// Intensity K(0) = 1 / ((2 pi)^(d/2) sqrt(det Sigma)).
double gdp_intensity(const MatrixXd& sigma);

/// Raw statistic
///   |B(0;1)| r^(d+2)/(d+2) I - |B(0;R-r)|^-1 sum_{i interior} sum_{j ~ i} (X_i - X_j)(X_i - X_j)^T
/// for a pattern in a ball window.
MatrixXd estimate_sigma_hat(const PointPattern& pattern, double r);

/// Under a unit-intensity GDP the raw statistic concentrates at
/// 2^(-d/2-1) Sigma; this rescales it to estimate Sigma itself.
MatrixXd calibrated_sigma_hat(const PointPattern& pattern, double r);

/// r_{n,d} = c sqrt(d log n).
double interaction_radius(Index n, int d, double c);
/// d^2 (c sqrt(log n))^(d+1) / sqrt(n).
double detection_rate(Index n, int d, double c);

struct SpikeTestReport {
  double statistic = 0.0;  // 2 pi ||Sigma_hat||_op
  double threshold = 0.0;  // 1 + rate / delta
  double rate = 0.0;
  bool reject = false;
  VectorXd direction;
};

SpikeTestReport spike_test(const MatrixXd& sigma_hat, Index n, int d, double delta, double c);

/// Largest alias-summed eigenvalue of the GDP kernel discretized on
/// `cells` cells per axis of the box (cells = 0 means continuous).
double gdp_max_eigenvalue(const MatrixXd& sigma, const Window& box, int cells);

/// Approximate GDP on a box treated as a torus. Frequencies k/h are kept
/// independently with probability exp(-2 pi^2 xi^T Sigma xi) (alias-summed
/// on a grid), then the projection process is drawn by the chain rule.
/// With cells > 0 points are cell centres plus uniform jitter.
PointPattern sample_gdp_grid(const MatrixXd& sigma, const Window& box, int cells, Rng& rng);

/// Spiked GDP restricted to the ball B(0, radius): an isotropic sample
/// sheared by the volume-preserving map with A A^T = (2 pi) Sigma.
PointPattern sample_spiked_gdp(double lambda, const VectorXd& u, double radius, int cells,
                               Rng& rng);

enum class LatticeKind { Z1, Z2, Triangular, Z3, FCC };

LatticeKind lattice_from_string(const std::string& s);
const char* to_string(LatticeKind k);
/// Rows are primitive vectors, scaled to unit covolume (one point per unit volume).
MatrixXd lattice_basis(LatticeKind k);

/// Lattice points displaced by i.i.d. N(0, sigma^2 I), kept if inside the
/// window. `random_shift` translates the lattice uniformly over a cell first.
PointPattern sample_perturbed_lattice(LatticeKind k, double sigma, const Window& window, Rng& rng,
                                      bool random_shift = false);

struct VarianceCurveRow {
  double radius = 0.0;
  double mean = 0.0;
  double variance = 0.0;
};

/// Count fluctuations in balls centred uniformly in the window eroded by
/// the largest radius, one fresh pattern per replicate.
std::vector<VarianceCurveRow> number_variance(const std::function<PointPattern(Rng&)>& sampler,
                                              const std::vector<double>& radii, int replicates,
                                              Rng& rng);

/// Per-pattern product prod_{j != B} (1 + theta |X_B|^{d beta} / |X_j|^{d beta})^{-1},
/// X_B nearest to the origin (lowest index on ties), for every theta.
std::vector<double> coverage_product(const PointPattern& pattern,
                                     const std::vector<double>& theta, double beta);

/// Monte Carlo p_c(theta, beta) over `replicates` patterns.
std::vector<double> coverage_probability(const std::function<PointPattern(Rng&)>& sampler,
                                         const std::vector<double>& theta, double beta,
                                         int replicates, Rng& rng);

/// sum_{v != 0, |v| <= cutoff} |v|^-s plus the continuum tail beyond the cutoff.
double epstein_zeta(LatticeKind k, double s, double cutoff);

/// Pair correlation g on the annuli [edges[i], edges[i+1]) using only
/// reference points whose outer annulus lies inside the window.
std::vector<double> pair_correlation(const PointPattern& pattern, const std::vector<double>& edges);

}  // namespace negdep

#endif
