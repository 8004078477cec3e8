#include "negdep/spatial.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

namespace negdep {

namespace {

constexpr double kPi = std::numbers::pi;

// Calls fn(i, j) for every unordered pair with |x_i - x_j| < r (each pair once, i != j).
template <class Fn>
void for_each_close_pair(const MatrixXd& pts, double r, Fn&& fn) {
  const Index n = pts.rows();
  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::sort(order.begin(), order.end(), [&](Index a, Index b) { return pts(a, 0) < pts(b, 0); });
  const double r2 = r * r;
  for (std::size_t a = 0; a < order.size(); ++a) {
    const Index i = order[a];
    for (std::size_t b = a + 1; b < order.size(); ++b) {
      const Index j = order[b];
      if (pts(j, 0) - pts(i, 0) >= r) break;
      const double d2 = (pts.row(i) - pts.row(j)).squaredNorm();
      if (d2 < r2) fn(i, j, d2);
    }
  }
}

MatrixXd orthonormal_completion(const VectorXd& u) {
  const Index d = u.size();
  MatrixXd a = MatrixXd::Identity(d, d);
  a.col(0) = u;
  Eigen::HouseholderQR<MatrixXd> qr(a);
  MatrixXd q = qr.householderQ() * MatrixXd::Identity(d, d);
  if (q.col(0).dot(u) < 0) q.col(0) = -q.col(0);
  return q;
}

double inradius(const Window& w) {
  if (w.shape == Window::Shape::Ball) return w.radius;
  return 0.5 * (w.hi - w.lo).minCoeff();
}

}  // namespace

void validate_scattering(const MatrixXd& sigma) {
  if (sigma.rows() == 0 || sigma.rows() != sigma.cols())
    throw std::invalid_argument("scattering matrix must be square");
  if (!sigma.allFinite()) throw std::invalid_argument("scattering matrix is not finite");
  const double scale = std::max(1.0, sigma.cwiseAbs().maxCoeff());
  if ((sigma - sigma.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw std::invalid_argument("scattering matrix is not symmetric");
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(sigma);
  if (es.eigenvalues().minCoeff() <= 0.0)
    throw std::invalid_argument("scattering matrix must be positive definite");
}

MatrixXd spiked_sigma(double lambda, const VectorXd& u, int d) {
  if (d < 2) throw std::invalid_argument("spiked model needs d >= 2");
  if (u.size() != d) throw std::invalid_argument("spike direction has the wrong dimension");
  if (std::abs(u.norm() - 1.0) > 1e-10) throw std::invalid_argument("spike direction must be a unit vector");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw std::invalid_argument("lambda must be >= 0");
  const MatrixXd uu = u * u.transpose();
  const double perp = std::pow(1.0 + lambda, -1.0 / (d - 1));
  return (perp * (MatrixXd::Identity(d, d) - uu) + (1.0 + lambda) * uu) / (2.0 * kPi);
}

double gdp_intensity(const MatrixXd& sigma) {
  validate_scattering(sigma);
  const double d = static_cast<double>(sigma.rows());
  return 1.0 / (std::pow(2.0 * kPi, d / 2.0) * std::sqrt(sigma.determinant()));
}

namespace {

struct PairSum {
  MatrixXd sum;  // sum over interior i and r-neighbours j of (X_i - X_j)(X_i - X_j)^T
  double pairs = 0.0;  // number of such (i, j)
  Index interior = 0;
  double inner_radius = 0.0;
};

PairSum pair_sum(const PointPattern& pattern, double r) {
  const Window& w = pattern.window;
  if (w.shape != Window::Shape::Ball) throw std::invalid_argument("estimator needs a ball window");
  if (!(r > 0.0) || r >= w.radius) throw std::invalid_argument("need 0 < r < R");
  const int d = pattern.dim();
  PairSum ps;
  ps.inner_radius = w.radius - r;
  std::vector<char> interior(static_cast<std::size_t>(pattern.size()));
  for (Index i = 0; i < pattern.size(); ++i) {
    interior[static_cast<std::size_t>(i)] =
        (pattern.points.row(i).transpose() - w.center).norm() < ps.inner_radius;
    ps.interior += interior[static_cast<std::size_t>(i)];
  }
  if (ps.interior == 0) throw std::invalid_argument("no interior points");
  ps.sum = MatrixXd::Zero(d, d);
  for_each_close_pair(pattern.points, r, [&](Index i, Index j, double) {
    const VectorXd h = pattern.points.row(i) - pattern.points.row(j);
    const int mult = interior[static_cast<std::size_t>(i)] + interior[static_cast<std::size_t>(j)];
    if (mult) {
      ps.sum.noalias() += static_cast<double>(mult) * (h * h.transpose());
      ps.pairs += mult;
    }
  });
  return ps;
}

}  // namespace

MatrixXd estimate_sigma_hat(const PointPattern& pattern, double r) {
  const PairSum ps = pair_sum(pattern, r);
  const int d = pattern.dim();
  const double vd = unit_ball_volume(d);
  return vd * std::pow(r, d + 2) / (d + 2) * MatrixXd::Identity(d, d) -
         ps.sum / (vd * std::pow(ps.inner_radius, d));
}

MatrixXd calibrated_sigma_hat(const PointPattern& pattern, double r) {
  const PairSum ps = pair_sum(pattern, r);
  const int d = pattern.dim();
  const double vd = unit_ball_volume(d);
  // Isotropic unit-intensity reference: 1 - g(h) = exp(-2 pi |h|^2).
  const double a = 2.0 * kPi * r * r;
  const double deficit = std::pow(2.0, -d / 2.0) * boost::math::gamma_p(d / 2.0, a);
  const double second = boost::math::gamma_p(d / 2.0 + 1.0, a);
  // The observed neighbour count fixes the local intensity.
  const double expected = vd * std::pow(r, d) - deficit;
  if (!(ps.pairs > 0.0)) throw NumericalError("no neighbour pairs within r");
  const MatrixXd raw = vd * std::pow(r, d + 2) / (d + 2) * MatrixXd::Identity(d, d) -
                       ps.sum * (expected / ps.pairs);
  return std::pow(2.0, d / 2.0 + 1.0) / second * raw;
}

double interaction_radius(Index n, int d, double c) {
  if (n <= 1) throw std::invalid_argument("need n > 1");
  return c * std::sqrt(d * std::log(static_cast<double>(n)));
}

double detection_rate(Index n, int d, double c) {
  if (n <= 1) throw std::invalid_argument("need n > 1");
  return d * d * std::pow(c * std::sqrt(std::log(static_cast<double>(n))), d + 1) /
         std::sqrt(static_cast<double>(n));
}

SpikeTestReport spike_test(const MatrixXd& sigma_hat, Index n, int d, double delta, double c) {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("delta must lie in (0, 1)");
  if (!(c > 0.0)) throw std::invalid_argument("c must be positive");
  if (sigma_hat.rows() != d || sigma_hat.cols() != d) throw std::invalid_argument("shape mismatch");
  SpikeTestReport rep;
  rep.rate = detection_rate(n, d, c);
  Eigen::SelfAdjointEigenSolver<MatrixXd> es(0.5 * (sigma_hat + sigma_hat.transpose()));
  Index top = 0;
  es.eigenvalues().cwiseAbs().maxCoeff(&top);
  rep.statistic = 2.0 * kPi * std::abs(es.eigenvalues()(top));
  rep.direction = es.eigenvectors().col(top).normalized();
  rep.threshold = 1.0 + rep.rate / delta;
  rep.reject = rep.statistic > rep.threshold;
  return rep;
}

namespace {

struct FrequencySet {
  MatrixXd xi;     // rows
  VectorXd prob;   // selection probabilities (clipped)
  double max_eig = 0.0;
};

FrequencySet gdp_frequencies(const MatrixXd& sigma, const Window& box, int cells) {
  validate_scattering(sigma);
  if (box.shape != Window::Shape::Box) throw std::invalid_argument("GDP sampling needs a box window");
  const int d = static_cast<int>(sigma.rows());
  if (box.dim() != d) throw std::invalid_argument("window/scattering dimension mismatch");
  if (cells < 0) throw std::invalid_argument("cells must be >= 0");
  const VectorXd h = box.hi - box.lo;
  if (h.minCoeff() <= 0.0) throw std::invalid_argument("degenerate box");
  const double lmin = Eigen::SelfAdjointEigenSolver<MatrixXd>(sigma).eigenvalues()(0);
  // exp(-2 pi^2 q) < 1e-17 once q > 2.
  const double qmax = 2.0;
  const double xi_max = std::sqrt(qmax / lmin);
  auto symbol = [&](const VectorXd& xi) { return std::exp(-2.0 * kPi * kPi * xi.dot(sigma * xi)); };

  std::vector<int> lo(d), hi(d);
  for (int a = 0; a < d; ++a) {
    if (cells > 0) {
      lo[a] = -(cells / 2);
      hi[a] = (cells - 1) / 2;
    } else {
      const int k = static_cast<int>(std::ceil(xi_max * h(a)));
      lo[a] = -k;
      hi[a] = k;
    }
  }
  double total = 1.0;
  for (int a = 0; a < d; ++a) total *= hi[a] - lo[a] + 1;
  if (total > 5e7) throw std::invalid_argument("too many frequencies; shrink the box");

  // Alias offsets m / Delta that can contribute.
  std::vector<VectorXd> aliases;
  if (cells > 0) {
    std::vector<int> mr(d);
    for (int a = 0; a < d; ++a) mr[a] = static_cast<int>(std::ceil(xi_max * h(a) / cells)) + 1;
    std::vector<int> m(d);
    for (int a = 0; a < d; ++a) m[a] = -mr[a];
    while (true) {
      VectorXd off(d);
      for (int a = 0; a < d; ++a) off(a) = m[a] * cells / h(a);
      aliases.push_back(off);
      int a = 0;
      while (a < d && ++m[a] > mr[a]) {
        m[a] = -mr[a];
        ++a;
      }
      if (a == d) break;
    }
  } else {
    aliases.push_back(VectorXd::Zero(d));
  }

  FrequencySet fs;
  std::vector<VectorXd> xs;
  std::vector<double> ps;
  std::vector<int> k(lo);
  while (true) {
    VectorXd xi(d);
    for (int a = 0; a < d; ++a) xi(a) = k[a] / h(a);
    double lam = 0.0;
    for (const auto& off : aliases) lam += symbol(xi + off);
    fs.max_eig = std::max(fs.max_eig, lam);
    if (lam > 1e-17) {
      xs.push_back(xi);
      ps.push_back(std::min(lam, 1.0));
    }
    int a = 0;
    while (a < d && ++k[a] > hi[a]) {
      k[a] = lo[a];
      ++a;
    }
    if (a == d) break;
  }
  fs.xi.resize(static_cast<Index>(xs.size()), d);
  fs.prob.resize(static_cast<Index>(ps.size()));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    fs.xi.row(static_cast<Index>(i)) = xs[i].transpose();
    fs.prob(static_cast<Index>(i)) = ps[i];
  }
  return fs;
}

}  // namespace

double gdp_max_eigenvalue(const MatrixXd& sigma, const Window& box, int cells) {
  return gdp_frequencies(sigma, box, cells).max_eig;
}

PointPattern sample_gdp_grid(const MatrixXd& sigma, const Window& box, int cells, Rng& rng) {
  const FrequencySet fs = gdp_frequencies(sigma, box, cells);
  if (fs.max_eig > 1.0 + 1e-6)
    throw NumericalError("discretized GDP kernel has an eigenvalue above 1; use more cells");
  const int d = static_cast<int>(sigma.rows());
  const VectorXd h = box.hi - box.lo;

  std::vector<Index> keep;
  for (Index j = 0; j < fs.prob.size(); ++j)
    if (rng.bernoulli(fs.prob(j))) keep.push_back(j);
  const Index n = static_cast<Index>(keep.size());
  if (n > 20000) throw std::invalid_argument("sample too large for the dense chain rule");
  MatrixXd xi(n, d);
  for (Index j = 0; j < n; ++j) xi.row(j) = fs.xi.row(keep[static_cast<std::size_t>(j)]);

  PointPattern out;
  out.window = box;
  out.intensity_hint = gdp_intensity(sigma);
  out.points.resize(n, d);
  if (n == 0) return out;

  // Unnormalized features phi_j(x) = exp(2 pi i xi_j . x), |phi(x)|^2 = n.
  MatrixXc e(n, n);
  const double nn = static_cast<double>(n);
  for (Index i = 0; i < n; ++i) {
    const Index batch = std::clamp<Index>(static_cast<Index>(std::ceil(nn / (nn - i))), 2, 256);
    bool placed = false;
    while (!placed) {
      MatrixXd cand(d, batch);
      for (Index b = 0; b < batch; ++b)
        for (int a = 0; a < d; ++a) {
          if (cells > 0) {
            const double c = static_cast<double>(rng.below(static_cast<std::uint64_t>(cells)));
            cand(a, b) = (c + 0.5) * h(a) / cells;
          } else {
            cand(a, b) = rng.uniform() * h(a);
          }
        }
      const MatrixXd phase = (2.0 * kPi) * (xi * cand);
      MatrixXc phi(n, batch);
      for (Index b = 0; b < batch; ++b)
        for (Index j = 0; j < n; ++j) phi(j, b) = std::polar(1.0, phase(j, b));
      MatrixXc proj;
      if (i > 0) proj.noalias() = e.leftCols(i).adjoint() * phi;
      for (Index b = 0; b < batch && !placed; ++b) {
        const double used = i > 0 ? proj.col(b).squaredNorm() : 0.0;
        const double acc = 1.0 - used / nn;
        if (rng.uniform() >= acc) continue;
        VectorXc v = phi.col(b);
        if (i > 0) {
          v.noalias() -= e.leftCols(i) * proj.col(b);
          v.noalias() -= e.leftCols(i) * (e.leftCols(i).adjoint() * v);
        }
        const double norm = v.norm();
        if (!(norm * norm > 1e-10 * nn)) continue;
        e.col(i) = v / norm;
        VectorXd x = cand.col(b);
        if (cells > 0)
          for (int a = 0; a < d; ++a) x(a) += (rng.uniform() - 0.5) * h(a) / cells;
        out.points.row(i) = (box.lo + x).transpose();
        placed = true;
      }
    }
  }
  return out;
}

PointPattern sample_spiked_gdp(double lambda, const VectorXd& u, double radius, int cells,
                               Rng& rng) {
  const int d = static_cast<int>(u.size());
  spiked_sigma(lambda, u, d);  // validates arguments
  if (!(radius > 0.0)) throw std::invalid_argument("radius must be positive");
  const double s = std::sqrt(1.0 + lambda);
  const double t = std::pow(1.0 + lambda, -1.0 / (2.0 * (d - 1)));
  VectorXd diag = VectorXd::Constant(d, t);
  diag(0) = s;
  const MatrixXd q = orthonormal_completion(u);
  const VectorXd half = radius * diag.cwiseInverse();
  const Window pre = Window::box(-half, half);
  const MatrixXd iso = MatrixXd::Identity(d, d) / (2.0 * kPi);
  PointPattern y = sample_gdp_grid(iso, pre, cells, rng);
  PointPattern x;
  x.window = Window::ball(VectorXd::Zero(d), radius);
  x.intensity_hint = 1.0;
  x.points = y.points * diag.asDiagonal() * q.transpose();
  return restrict_to(x, x.window);
}

LatticeKind lattice_from_string(const std::string& s) {
  if (s == "Z1" || s == "z1") return LatticeKind::Z1;
  if (s == "Z2" || s == "z2" || s == "square") return LatticeKind::Z2;
  if (s == "triangular") return LatticeKind::Triangular;
  if (s == "Z3" || s == "z3" || s == "cubic") return LatticeKind::Z3;
  if (s == "FCC" || s == "fcc") return LatticeKind::FCC;
  throw std::invalid_argument("unknown lattice: " + s);
}

const char* to_string(LatticeKind k) {
  switch (k) {
    case LatticeKind::Z1: return "Z1";
    case LatticeKind::Z2: return "Z2";
    case LatticeKind::Triangular: return "triangular";
    case LatticeKind::Z3: return "Z3";
    case LatticeKind::FCC: return "FCC";
  }
  return "?";
}

MatrixXd lattice_basis(LatticeKind k) {
  switch (k) {
    case LatticeKind::Z1: return MatrixXd::Identity(1, 1);
    case LatticeKind::Z2: return MatrixXd::Identity(2, 2);
    case LatticeKind::Z3: return MatrixXd::Identity(3, 3);
    case LatticeKind::Triangular: {
      MatrixXd g(2, 2);
      g << 1.0, 0.0, 0.5, std::sqrt(3.0) / 2.0;
      return g * std::sqrt(2.0 / std::sqrt(3.0));
    }
    case LatticeKind::FCC: {
      MatrixXd g(3, 3);
      g << 0, 1, 1, 1, 0, 1, 1, 1, 0;
      return g * (std::cbrt(4.0) / 2.0);
    }
  }
  throw std::invalid_argument("unknown lattice");
}

namespace {

// Lattice points c G (c integer) inside the axis box [lo, hi].
template <class Fn>
void for_each_lattice_point(const MatrixXd& g, const VectorXd& lo, const VectorXd& hi, Fn&& fn) {
  const int d = static_cast<int>(g.rows());
  const MatrixXd ginv = g.inverse();
  VectorXd cmin = VectorXd::Constant(d, std::numeric_limits<double>::infinity());
  VectorXd cmax = -cmin;
  for (int corner = 0; corner < (1 << d); ++corner) {
    VectorXd v(d);
    for (int a = 0; a < d; ++a) v(a) = (corner >> a & 1) ? hi(a) : lo(a);
    const VectorXd c = ginv.transpose() * v;
    cmin = cmin.cwiseMin(c);
    cmax = cmax.cwiseMax(c);
  }
  std::vector<long> a0(d), a1(d), c(d);
  for (int a = 0; a < d; ++a) {
    a0[a] = static_cast<long>(std::floor(cmin(a))) - 1;
    a1[a] = static_cast<long>(std::ceil(cmax(a))) + 1;
    c[a] = a0[a];
  }
  VectorXd coef(d);
  while (true) {
    for (int a = 0; a < d; ++a) coef(a) = static_cast<double>(c[a]);
    const VectorXd v = g.transpose() * coef;
    if ((v.array() >= lo.array()).all() && (v.array() <= hi.array()).all()) fn(v, coef);
    int a = 0;
    while (a < d && ++c[a] > a1[a]) {
      c[a] = a0[a];
      ++a;
    }
    if (a == d) break;
  }
}

}  // namespace

PointPattern sample_perturbed_lattice(LatticeKind k, double sigma, const Window& window, Rng& rng,
                                      bool random_shift) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) throw std::invalid_argument("sigma must be >= 0");
  const MatrixXd g = lattice_basis(k);
  const int d = static_cast<int>(g.rows());
  if (window.dim() != d) throw std::invalid_argument("window/lattice dimension mismatch");
  VectorXd shift = VectorXd::Zero(d);
  if (random_shift) {
    VectorXd c(d);
    for (int a = 0; a < d; ++a) c(a) = rng.uniform();
    shift = g.transpose() * c;
  }
  const double margin = 8.0 * sigma + g.rowwise().norm().sum();
  std::vector<VectorXd> pts;
  for_each_lattice_point(g, window.lo.array() - margin, window.hi.array() + margin,
                         [&](const VectorXd& v, const VectorXd&) {
                           VectorXd x = v + shift;
                           if (sigma > 0.0)
                             for (int a = 0; a < d; ++a) x(a) += sigma * rng.normal();
                           if (window.contains(x)) pts.push_back(x);
                         });
  PointPattern out;
  out.window = window;
  out.intensity_hint = 1.0;
  out.points.resize(static_cast<Index>(pts.size()), d);
  for (std::size_t i = 0; i < pts.size(); ++i) out.points.row(static_cast<Index>(i)) = pts[i].transpose();
  return out;
}

std::vector<VarianceCurveRow> number_variance(const std::function<PointPattern(Rng&)>& sampler,
                                              const std::vector<double>& radii, int replicates,
                                              Rng& rng) {
  if (replicates < 100) throw std::invalid_argument("number variance needs >= 100 replicates");
  if (radii.empty()) throw std::invalid_argument("no radii");
  const double rmax = *std::max_element(radii.begin(), radii.end());
  std::vector<std::vector<double>> counts(radii.size());
  for (int r = 0; r < replicates; ++r) {
    Rng rr = rng.split(static_cast<std::uint64_t>(r));
    const PointPattern p = sampler(rr);
    if (rmax > 0.25 * inradius(p.window)) throw std::invalid_argument("radii must stay within window/4");
    const VectorXd c = p.window.eroded(rmax).sample_uniform(rr);
    for (std::size_t t = 0; t < radii.size(); ++t)
      counts[t].push_back(static_cast<double>(count_in_ball(p, c, radii[t])));
  }
  std::vector<VarianceCurveRow> rows;
  for (std::size_t t = 0; t < radii.size(); ++t) {
    VarianceCurveRow row;
    row.radius = radii[t];
    double m = 0.0;
    for (double v : counts[t]) m += v;
    m /= replicates;
    double s = 0.0;
    for (double v : counts[t]) s += (v - m) * (v - m);
    row.mean = m;
    row.variance = s / (replicates - 1);
    rows.push_back(row);
  }
  return rows;
}

std::vector<double> coverage_product(const PointPattern& pattern, const std::vector<double>& theta,
                                     double beta) {
  if (pattern.size() == 0) throw std::invalid_argument("empty pattern");
  if (!(beta > 0.0)) throw std::invalid_argument("beta must be positive");
  for (double t : theta)
    if (!(t >= 0.0)) throw std::invalid_argument("theta must be >= 0");
  const VectorXd dist = pattern.points.rowwise().norm();
  Index b = 0;
  for (Index i = 1; i < dist.size(); ++i)
    if (dist(i) < dist(b)) b = i;
  const double expo = pattern.dim() * beta;
  std::vector<double> out(theta.size(), 1.0);
  for (Index j = 0; j < dist.size(); ++j) {
    if (j == b) continue;
    const double ratio = dist(j) > 0.0 ? std::pow(dist(b) / dist(j), expo) : 1.0;
    for (std::size_t t = 0; t < theta.size(); ++t) {
      if (theta[t] == 0.0) continue;
      out[t] /= std::isinf(theta[t]) ? (ratio > 0.0 ? theta[t] : 1.0) : 1.0 + theta[t] * ratio;
    }
  }
  return out;
}

std::vector<double> coverage_probability(const std::function<PointPattern(Rng&)>& sampler,
                                         const std::vector<double>& theta, double beta,
                                         int replicates, Rng& rng) {
  if (replicates < 1) throw std::invalid_argument("need at least one replicate");
  std::vector<double> acc(theta.size(), 0.0);
  for (int r = 0; r < replicates; ++r) {
    Rng rr = rng.split(static_cast<std::uint64_t>(r));
    const auto p = coverage_product(sampler(rr), theta, beta);
    for (std::size_t t = 0; t < theta.size(); ++t) acc[t] += p[t];
  }
  for (double& a : acc) a /= replicates;
  return acc;
}

double epstein_zeta(LatticeKind k, double s, double cutoff) {
  const MatrixXd g = lattice_basis(k);
  const int d = static_cast<int>(g.rows());
  if (!(s > d)) throw std::invalid_argument("Epstein zeta needs s > d");
  if (!(cutoff > 1.0)) throw std::invalid_argument("cutoff must exceed 1");
  const VectorXd half = VectorXd::Constant(d, cutoff);
  double sum = 0.0;
  for_each_lattice_point(g, -half, half, [&](const VectorXd& v, const VectorXd&) {
    const double r = v.norm();
    if (r > 0.0 && r <= cutoff) sum += std::pow(r, -s);
  });
  const double tail = d * unit_ball_volume(d) * std::pow(cutoff, d - s) / (s - d);
  return sum + tail;
}

std::vector<double> pair_correlation(const PointPattern& pattern, const std::vector<double>& edges) {
  if (edges.size() < 2) throw std::invalid_argument("need at least one annulus");
  for (std::size_t b = 1; b < edges.size(); ++b)
    if (!(edges[b] > edges[b - 1]) || edges[0] < 0.0) throw std::invalid_argument("edges must increase");
  const double rmax = edges.back();
  const Window inner = pattern.window.eroded(rmax);
  const int d = pattern.dim();
  std::vector<char> ref(static_cast<std::size_t>(pattern.size()));
  Index n_ref = 0;
  for (Index i = 0; i < pattern.size(); ++i) {
    ref[static_cast<std::size_t>(i)] = !inner.empty() && inner.contains(pattern.points.row(i).transpose());
    n_ref += ref[static_cast<std::size_t>(i)];
  }
  if (n_ref == 0) throw std::invalid_argument("no reference points away from the boundary");
  const double rho = static_cast<double>(pattern.size()) / pattern.window.volume();
  std::vector<double> counts(edges.size() - 1, 0.0);
  for_each_close_pair(pattern.points, rmax, [&](Index i, Index j, double d2) {
    const double r = std::sqrt(d2);
    auto it = std::upper_bound(edges.begin(), edges.end(), r);
    if (it == edges.begin() || it == edges.end()) return;
    const std::size_t b = static_cast<std::size_t>(it - edges.begin()) - 1;
    counts[b] += ref[static_cast<std::size_t>(i)] + ref[static_cast<std::size_t>(j)];
  });
  std::vector<double> g(counts.size());
  const double vd = unit_ball_volume(d);
  for (std::size_t b = 0; b < counts.size(); ++b) {
    const double shell = vd * (std::pow(edges[b + 1], d) - std::pow(edges[b], d));
    g[b] = counts[b] / (static_cast<double>(n_ref) * rho * shell);
  }
  return g;
}

}  // namespace negdep
