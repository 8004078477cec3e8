#include "negdep/gaf.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include <Eigen/Eigenvalues>

namespace negdep {

namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kTailTol = 1e-13;

double log_weight(GafModel model, double L, Index n) {
  const double nn = static_cast<double>(n);
  switch (model) {
    case GafModel::Planar:
      return 0.5 * (nn * std::log(L) - std::lgamma(nn + 1.0));
    case GafModel::Spherical:
      if (nn > L) return -std::numeric_limits<double>::infinity();
      return 0.5 * (std::lgamma(L + 1.0) - std::lgamma(nn + 1.0) - std::lgamma(L - nn + 1.0));
    case GafModel::Hyperbolic:
      return 0.5 * (std::lgamma(L + nn) - std::lgamma(L) - std::lgamma(nn + 1.0));
  }
  return 0.0;
}

void check_model(GafModel model, double L) {
  if (!(L > 0.0) || !std::isfinite(L)) throw std::invalid_argument("L must be positive");
  if (model == GafModel::Spherical && (L != std::floor(L) || L > 1e6))
    throw std::invalid_argument("spherical GAF needs an integer L");
}

cplx horner(const VectorXc& a, cplx z) {
  cplx s = 0.0;
  for (Index n = a.size() - 1; n >= 0; --n) s = s * z + a(n);
  return s;
}

// Diagonal similarity scaling by powers of two so that row and column
// norms match (Parlett-Reinsch).
void balance(MatrixXc& a) {
  const Index n = a.rows();
  bool done = false;
  for (int sweep = 0; sweep < 100 && !done; ++sweep) {
    done = true;
    for (Index i = 0; i < n; ++i) {
      double c = 0.0, r = 0.0;
      for (Index j = 0; j < n; ++j)
        if (j != i) {
          c += std::abs(a(j, i));
          r += std::abs(a(i, j));
        }
      if (c == 0.0 || r == 0.0) continue;
      const double total = c + r;
      double g = 1.0;
      while (c < 0.5 * r) {
        c *= 2.0;
        r *= 0.5;
        g *= 2.0;
      }
      while (c >= 2.0 * r) {
        c *= 0.5;
        r *= 2.0;
        g *= 0.5;
      }
      if (c + r < 0.95 * total) {
        done = false;
        a.row(i) /= g;
        a.col(i) *= g;
      }
    }
  }
}

}  // namespace

const char* to_string(GafModel m) {
  switch (m) {
    case GafModel::Planar: return "planar";
    case GafModel::Spherical: return "spherical";
    case GafModel::Hyperbolic: return "hyperbolic";
  }
  return "?";
}

GafModel gaf_model_from_string(const std::string& s) {
  if (s == "planar") return GafModel::Planar;
  if (s == "spherical") return GafModel::Spherical;
  if (s == "hyperbolic") return GafModel::Hyperbolic;
  throw std::invalid_argument("unknown GAF model: " + s);
}

cplx GafSeries::eval(cplx z) const { return horner(coeffs, z); }

cplx GafSeries::derivative(cplx z) const {
  cplx s = 0.0;
  for (Index n = coeffs.size() - 1; n >= 1; --n) s = s * z + static_cast<double>(n) * coeffs(n);
  return s;
}

double GafSeries::reliable_radius() const {
  const Index m = coeffs.size();
  if (model == GafModel::Spherical) return std::numeric_limits<double>::infinity();
  // Largest r at which the first omitted weight is below kTailTol times
  // the standard deviation sqrt(K(r, r)) of the full series.
  auto excess = [&](double r) {
    const double lr = std::log(r);
    double log_sd;
    if (model == GafModel::Planar) {
      log_sd = 0.5 * L * r * r;
    } else {
      if (r >= 1.0) return std::numeric_limits<double>::infinity();
      log_sd = -0.5 * L * std::log1p(-r * r);
    }
    return log_weight(model, L, m) + static_cast<double>(m) * lr - log_sd - std::log(kTailTol);
  };
  double lo = 1e-6, hi = model == GafModel::Planar ? 1.0 : 1.0 - 1e-12;
  if (excess(lo) > 0.0) return 0.0;
  if (model == GafModel::Planar)
    while (excess(hi) <= 0.0) hi *= 2.0;
  else if (excess(hi) <= 0.0)
    return hi;
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    (excess(mid) > 0.0 ? hi : lo) = mid;
  }
  return lo;
}

VectorXd gaf_weights(GafModel model, double L, Index m) {
  check_model(model, L);
  VectorXd w(m);
  for (Index n = 0; n < m; ++n) w(n) = std::exp(log_weight(model, L, n));
  return w;
}

Index gaf_min_truncation(GafModel model, double L, double radius) {
  check_model(model, L);
  if (!(radius > 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be positive");
  switch (model) {
    case GafModel::Planar:
      return std::max<Index>(static_cast<Index>(std::ceil(4.0 * std::numbers::e * L * radius * radius)), 64);
    case GafModel::Spherical:
      return static_cast<Index>(L) + 1;
    case GafModel::Hyperbolic: {
      // Zeros are kept up to 0.75 of the reliable radius, which stays below 1.
      if (radius >= 0.75) throw std::invalid_argument("hyperbolic disk radius must be below 0.75");
      const double target = radius / 0.75;
      const double log_sd = -0.5 * L * std::log1p(-target * target);
      for (Index m = 64; m < 2000000; ++m)
        if (log_weight(model, L, m) + static_cast<double>(m) * std::log(target) - log_sd < std::log(kTailTol))
          return m;
      throw std::invalid_argument("radius too close to the unit circle");
    }
  }
  return 0;
}

GafSeries sample_gaf(GafModel model, double L, double radius, Rng& rng, Index truncation) {
  const Index need = gaf_min_truncation(model, L, radius);
  Index m = truncation == 0 ? need : truncation;
  if (model == GafModel::Spherical) m = need;
  if (m < need) throw std::invalid_argument("truncation below the minimum for this disk");
  GafSeries f;
  f.model = model;
  f.L = L;
  const VectorXd w = gaf_weights(model, L, m);
  f.coeffs.resize(m);
  for (Index n = 0; n < m; ++n) f.coeffs(n) = w(n) * rng.complex_normal();
  return f;
}

std::vector<cplx> find_zeros(const GafSeries& f, double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const double rel = f.reliable_radius();
  if (radius > 0.75 * rel) throw std::invalid_argument("disk exceeds the reliable radius of the truncation");
  // Rescale to w = z / s with s the reliable radius, where the omitted
  // tail is negligible, and drop trailing terms below roundoff there.
  const double s = std::isfinite(rel) ? rel : std::max(1.0, radius);
  const double ls = std::log(s);
  VectorXc b = VectorXc::Zero(f.coeffs.size());
  double big = 0.0;
  for (Index n = 0; n < b.size(); ++n) {
    const double m = std::abs(f.coeffs(n));
    if (m == 0.0) continue;
    b(n) = f.coeffs(n) / m * std::exp(std::log(m) + static_cast<double>(n) * ls);
    big = std::max(big, std::abs(b(n)));
  }
  if (!(big > 0.0)) throw NumericalError("all coefficients vanish");
  if (!std::isfinite(big)) throw NumericalError("coefficient overflow");
  Index deg = b.size() - 1;
  while (deg > 0 && std::abs(b(deg)) <= 1e-17 * big) --deg;
  std::vector<cplx> roots;
  if (deg == 0) return roots;

  MatrixXc comp = MatrixXc::Zero(deg, deg);
  for (Index i = 1; i < deg; ++i) comp(i, i - 1) = 1.0;
  for (Index i = 0; i < deg; ++i) comp(i, deg - 1) = -b(i) / b(deg);
  balance(comp);
  Eigen::ComplexEigenSolver<MatrixXc> es(comp, false);
  if (es.info() != Eigen::Success) throw NumericalError("companion eigenvalues did not converge");

  std::vector<cplx> cand;
  for (Index i = 0; i < deg; ++i) {
    cplx z = es.eigenvalues()(i) * s;
    if (std::abs(z) > 1.1 * radius) continue;
    for (int it = 0; it < 8; ++it) {
      const cplx fz = f.eval(z);
      const cplx dz = f.derivative(z);
      if (dz == cplx(0.0)) break;
      const cplx step = fz / dz;
      z -= step;
      if (std::abs(step) <= 1e-15 * std::max(1.0, std::abs(z))) break;
    }
    cand.push_back(z);
  }
  // Cross-check the count on a contour kept away from every candidate.
  double check = radius, gap = -1.0;
  for (double t : {1.0, 1.01, 1.02, 1.03, 1.04}) {
    double g = std::numeric_limits<double>::infinity();
    for (cplx z : cand) g = std::min(g, std::abs(std::abs(z) - t * radius));
    if (g > gap) {
      gap = g;
      check = t * radius;
    }
  }
  const int inside = static_cast<int>(std::count_if(cand.begin(), cand.end(), [&](cplx z) { return std::abs(z) <= check; }));
  const int samples = static_cast<int>(std::max<Index>(4096, 32 * deg));
  if (count_zeros_argument(f, 0.0, check, samples) != inside)
    throw NumericalError("zero count disagrees with the argument principle");
  for (cplx z : cand)
    if (std::abs(z) <= radius) roots.push_back(z);
  std::sort(roots.begin(), roots.end(), [](cplx a, cplx c) {
    return a.real() != c.real() ? a.real() < c.real() : a.imag() < c.imag();
  });
  return roots;
}

int count_zeros_argument(const GafSeries& f, cplx center, double radius, int samples) {
  if (!(radius > 0.0) || samples < 16) throw std::invalid_argument("bad contour");
  double total = 0.0;
  cplx prev = f.eval(center + radius);
  for (int s = 1; s <= samples; ++s) {
    const double t = 2.0 * kPi * s / samples;
    const cplx cur = f.eval(center + radius * std::polar(1.0, t));
    if (cur == cplx(0.0)) throw NumericalError("zero on the contour");
    total += std::arg(cur / prev);
    prev = cur;
  }
  return static_cast<int>(std::lround(total / (2.0 * kPi)));
}

VectorXd hermite_functions(int kmax, double x) {
  if (kmax < 0 || kmax > 60) throw std::invalid_argument("Hermite index must lie in [0, 60]");
  VectorXd h(kmax + 1);
  const double y = std::sqrt(2.0 * kPi) * x;
  h(0) = std::pow(2.0, 0.25) * std::exp(-kPi * x * x);
  if (kmax >= 1) h(1) = std::sqrt(2.0) * y * h(0);
  for (int k = 1; k < kmax; ++k)
    h(k + 1) = std::sqrt(2.0 / (k + 1)) * y * h(k) - std::sqrt(static_cast<double>(k) / (k + 1)) * h(k - 1);
  return h;
}

double hermite_function(int k, double x) { return hermite_functions(k, x)(k); }

cplx stft_hermite(int k, cplx z) {
  if (k < 0) throw std::invalid_argument("Hermite index must be >= 0");
  const double r = std::abs(z);
  if (r == 0.0) return k == 0 ? cplx(1.0) : cplx(0.0);
  const double u = z.real(), v = z.imag();
  const double logmod = -0.5 * kPi * r * r + 0.5 * k * std::log(kPi) - 0.5 * std::lgamma(k + 1.0) + k * std::log(r);
  return std::polar(std::exp(logmod), -kPi * u * v - k * std::arg(z));
}

double stft_hermite_sup_closed(int k) {
  if (k < 0) throw std::invalid_argument("Hermite index must be >= 0");
  double s = 0.0;
  for (int n = 1; n <= k; ++n) s += 0.5 * std::log(static_cast<double>(k) / (std::numbers::e * n));
  return std::exp(s);
}

SupSearch stft_hermite_sup_search(int k, int grid) {
  if (grid < 8) throw std::invalid_argument("grid too small");
  const double rmax = std::sqrt(k / kPi) + 4.0;
  SupSearch best;
  double best_r_step = rmax / grid;
  for (int a = 0; a < grid; ++a) {
    const double th = 2.0 * kPi * a / grid;
    for (int i = 0; i <= grid; ++i) {
      const double r = rmax * i / grid;
      const double v = std::abs(stft_hermite(k, std::polar(r, th)));
      if (v > best.value) best = {v, r, th};
    }
  }
  // Golden-section refinement along the ray through the best cell.
  double lo = std::max(0.0, best.radius - best_r_step), hi = best.radius + best_r_step;
  const double g = 0.5 * (std::sqrt(5.0) - 1.0);
  auto val = [&](double r) { return std::abs(stft_hermite(k, std::polar(r, best.angle))); };
  double x1 = hi - g * (hi - lo), x2 = lo + g * (hi - lo);
  double f1 = val(x1), f2 = val(x2);
  for (int it = 0; it < 200 && hi - lo > 1e-14; ++it) {
    if (f1 < f2) {
      lo = x1;
      x1 = x2;
      f1 = f2;
      x2 = lo + g * (hi - lo);
      f2 = val(x2);
    } else {
      hi = x2;
      x2 = x1;
      f2 = f1;
      x1 = hi - g * (hi - lo);
      f1 = val(x1);
    }
  }
  const double r = 0.5 * (lo + hi);
  if (val(r) >= best.value) {
    best.radius = r;
    best.value = val(r);
  }
  return best;
}

cplx WhiteNoiseStft::eval(cplx z) const {
  const double r2 = std::norm(z);
  cplx p = std::exp(-0.5 * kPi * r2);
  const cplx step = std::sqrt(kPi) * z;
  cplx s = coeffs.size() ? coeffs(0) * p : cplx(0.0);
  for (Index j = 1; j < coeffs.size(); ++j) {
    p *= step / std::sqrt(static_cast<double>(j));
    s += coeffs(j) * p;
  }
  return std::sqrt(kPi) * std::polar(1.0, kPi * z.real() * z.imag()) * s;
}

GafSeries WhiteNoiseStft::analytic_part() const {
  GafSeries f;
  f.model = GafModel::Planar;
  f.L = kPi;
  const VectorXd w = gaf_weights(GafModel::Planar, kPi, coeffs.size());
  f.coeffs = coeffs.cwiseProduct(w.cast<cplx>());
  return f;
}

Index whitenoise_terms(double radius) {
  if (!(radius >= 0.0) || !std::isfinite(radius)) throw std::invalid_argument("radius must be >= 0");
  return gaf_min_truncation(GafModel::Planar, kPi, std::max(radius, 1e-3));
}

WhiteNoiseStft stft_whitenoise(Index n_terms, Rng& rng, bool complex_noise) {
  if (n_terms < 16) throw std::invalid_argument("white noise expansion needs at least 16 terms");
  WhiteNoiseStft w;
  w.coeffs.resize(n_terms);
  for (Index j = 0; j < n_terms; ++j) w.coeffs(j) = complex_noise ? rng.complex_normal() : cplx(rng.normal());
  return w;
}

WhiteNoiseStft noisy_hermite(int k, double lambda, Index n_terms, Rng& rng) {
  if (k < 0 || k >= n_terms) throw std::invalid_argument("Hermite index outside the expansion");
  WhiteNoiseStft w = stft_whitenoise(n_terms, rng);
  w.coeffs(k) += lambda;
  return w;
}

cplx SpectrogramGrid::cell_center(int row, int col) const {
  const double h = 2.0 * half_size / resolution;
  return {-half_size + (col + 0.5) * h, -half_size + (row + 0.5) * h};
}

BoolMatrix SpectrogramGrid::mask(double a) const { return (values.array() >= a).matrix(); }

SpectrogramGrid spectrogram(const WhiteNoiseStft& f, double half_size, int resolution) {
  if (!(half_size > 0.0)) throw std::invalid_argument("half size must be positive");
  if (resolution < 1) throw std::invalid_argument("resolution must be positive");
  SpectrogramGrid g;
  g.half_size = half_size;
  g.resolution = resolution;
  g.values.resize(resolution, resolution);
  for (int r = 0; r < resolution; ++r)
    for (int c = 0; c < resolution; ++c) g.values(r, c) = std::abs(f.eval(g.cell_center(r, c)));
  return g;
}

double detection_lambda_bound(int k, double L, double K, double tau) {
  if (!(L > 1.0)) throw std::invalid_argument("L must exceed 1");
  return 5.0 * std::sqrt(2.0) * (14.0 * K + tau) * std::sqrt(std::log(L)) / stft_hermite_sup_closed(k);
}

double noise_tail_level(double L, double tau) {
  if (!(L > 1.0)) throw std::invalid_argument("L must exceed 1");
  return 4.0 * std::exp(-tau * tau * std::log(L) / (2.0 * kPi));
}

DetectionResult detect_signal(const WhiteNoiseStft& obs, int k, double L, const DetectionOptions& opt,
                              double lambda_claimed) {
  if (k < 0) throw std::invalid_argument("Hermite index must be >= 0");
  if (L < std::max(std::sqrt(k / kPi), kPi)) throw std::invalid_argument("box half-size below max(sqrt(k/pi), pi)");
  if (!(opt.K > 0.0) || !(opt.tau > 0.0)) throw std::invalid_argument("K and tau must be positive");
  if (obs.coeffs.size() < whitenoise_terms(std::sqrt(2.0) * L))
    throw std::invalid_argument("too few Hermite coefficients for this box");
  DetectionResult res;
  res.threshold = 3.0 * std::sqrt(2.0) * (14.0 * opt.K + opt.tau) * std::log(L);
  res.lambda_bound = detection_lambda_bound(k, L, opt.K, opt.tau);
  res.grid = spectrogram(obs, L, opt.resolution);
  res.level_set = res.grid.mask(res.threshold);
  res.reject_noise = res.level_set.any();
  res.alpha = std::numeric_limits<double>::quiet_NaN();
  if (lambda_claimed > 0.0) {
    const double sup = stft_hermite_sup_closed(k);
    res.alpha = std::sqrt(2.0) * (14.0 * opt.K + opt.tau) * std::sqrt(std::log(L)) / (lambda_claimed * sup);
    res.signal_region.resize(opt.resolution, opt.resolution);
    for (int r = 0; r < opt.resolution; ++r)
      for (int c = 0; c < opt.resolution; ++c)
        res.signal_region(r, c) = std::abs(stft_hermite(k, res.grid.cell_center(r, c))) / sup > res.alpha;
  }
  return res;
}

}  // namespace negdep
