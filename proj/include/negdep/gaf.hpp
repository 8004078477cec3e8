#ifndef NEGDEP_GAF_HPP
#define NEGDEP_GAF_HPP

#include <string>
#include <vector>

#include "negdep/common.hpp"
#include "negdep/random.hpp"

namespace negdep {

using BoolMatrix = Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic>;

enum class GafModel { Planar, Spherical, Hyperbolic };

const char* to_string(GafModel m);
GafModel gaf_model_from_string(const std::string& s);

/// Truncated power series f(z) = sum_n a_n z^n with a_n = xi_n c_n.
struct GafSeries {
  GafModel model = GafModel::Planar;
  double L = 1.0;
  VectorXc coeffs;

  Index truncation() const { return coeffs.size(); }
  cplx eval(cplx z) const;
  cplx derivative(cplx z) const;
  /// Radius inside which the truncated tail is negligible.
  double reliable_radius() const;
};

/// Deterministic c_n for n < m.
VectorXd gaf_weights(GafModel model, double L, Index m);

/// Smallest truncation that resolves the disk of the given radius:
/// planar max(4 e L R^2, 64), spherical L + 1, hyperbolic from the geometric tail.
Index gaf_min_truncation(GafModel model, double L, double radius);

/// truncation = 0 selects gaf_min_truncation. Spherical ignores it beyond L + 1.
GafSeries sample_gaf(GafModel model, double L, double radius, Rng& rng, Index truncation = 0);

/// Zeros in |z| <= radius (companion eigenvalues, Newton polish), checked
/// against the winding number. Conditioning degrades past L radius^2 ~ 20.
std::vector<cplx> find_zeros(const GafSeries& f, double radius);

/// Winding number of f around |z - center| = radius.
int count_zeros_argument(const GafSeries& f, cplx center, double radius, int samples = 4096);

/// L2-normalized Hermite function, h_0(x) = 2^(1/4) exp(-pi x^2).
double hermite_function(int k, double x);
/// h_0 .. h_kmax at x.
VectorXd hermite_functions(int kmax, double x);

/// F_phi h_k(z) = exp(-pi i u v - pi |z|^2 / 2) sqrt(pi^k / k!) conj(z)^k.
cplx stft_hermite(int k, cplx z);

/// prod_{n=1..k} sqrt(k / (e n)).
double stft_hermite_sup_closed(int k);

struct SupSearch {
  double value = 0.0;
  double radius = 0.0;
  double angle = 0.0;
};

/// Polar grid search for the maximum of |F_phi h_k|, refined by golden section.
SupSearch stft_hermite_sup_search(int k, int grid = 256);

/// Hermite coefficients of an observation lambda h_k + xi.
struct WhiteNoiseStft {
  VectorXc coeffs;  // <f, h_j>

  /// sqrt(pi) exp(i pi u v - pi |z|^2 / 2) sum_j coeffs_j sqrt(pi^j / j!) z^j.
  cplx eval(cplx z) const;
  /// sum_j coeffs_j sqrt(pi^j / j!) z^j, which shares the zeros of eval.
  GafSeries analytic_part() const;
};

/// Terms needed so that the series is accurate on |z| <= radius.
Index whitenoise_terms(double radius);

/// Real (default) or complex standard Gaussian coefficients, n_terms >= 16.
WhiteNoiseStft stft_whitenoise(Index n_terms, Rng& rng, bool complex_noise = false);

struct SpectrogramGrid {
  double half_size = 0.0;
  int resolution = 0;
  MatrixXd values;  // |F f| at cell centres; row = imaginary index, col = real index

  cplx cell_center(int row, int col) const;
  /// Cells with value >= a.
  BoolMatrix mask(double a) const;
};

SpectrogramGrid spectrogram(const WhiteNoiseStft& f, double half_size, int resolution);

struct DetectionOptions {
  double K = 1.0 / 14.0;
  double tau = 1.0;
  int resolution = 200;
};

struct DetectionResult {
  bool reject_noise = false;
  double threshold = 0.0;  // 3 sqrt(2) (14 K + tau) log L
  double lambda_bound = 0.0;
  double alpha = 0.0;  // NaN unless lambda is supplied
  BoolMatrix level_set;
  /// {z : |F h_k(z)| / sup > alpha} on the same grid; empty unless lambda is supplied.
  BoolMatrix signal_region;
  SpectrogramGrid grid;
};

/// 5 sqrt(2) (14 K + tau) sqrt(log L) / prod sqrt(k / (e n)).
double detection_lambda_bound(int k, double L, double K, double tau);
/// 4 exp(-tau^2 log L / (2 pi)).
double noise_tail_level(double L, double tau);

/// lambda_claimed <= 0 skips the signal-region mask.
DetectionResult detect_signal(const WhiteNoiseStft& obs, int k, double L, const DetectionOptions& opt,
                              double lambda_claimed = 0.0);

/// Observation lambda h_k + xi with n_terms Hermite coefficients.
WhiteNoiseStft noisy_hermite(int k, double lambda, Index n_terms, Rng& rng);

}  // namespace negdep

#endif
