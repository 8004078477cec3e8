#include "negdep/point_pattern.hpp"

#include <cmath>
#include <numbers>
#include <unordered_set>

namespace negdep {

Window Window::box(VectorXd lo, VectorXd hi) {
  if (lo.size() != hi.size() || lo.size() == 0)
    throw std::invalid_argument("window corners must have equal positive dimension");
  if ((hi.array() < lo.array()).any()) throw std::invalid_argument("window has hi < lo");
  Window w;
  w.shape = Shape::Box;
  w.center = 0.5 * (lo + hi);
  w.lo = std::move(lo);
  w.hi = std::move(hi);
  return w;
}

Window Window::cube(int d, double side) {
  if (d <= 0 || !(side > 0.0)) throw std::invalid_argument("cube needs d > 0 and side > 0");
  return box(VectorXd::Zero(d), VectorXd::Constant(d, side));
}

Window Window::ball(VectorXd center, double radius) {
  if (center.size() == 0 || !(radius >= 0.0))
    throw std::invalid_argument("ball window needs a centre and radius >= 0");
  Window w;
  w.shape = Shape::Ball;
  w.radius = radius;
  w.lo = center.array() - radius;
  w.hi = center.array() + radius;
  w.center = std::move(center);
  return w;
}

double unit_ball_volume(int d) {
  return std::pow(std::numbers::pi, 0.5 * d) / std::tgamma(0.5 * d + 1.0);
}

double Window::volume() const {
  if (shape == Shape::Ball) return unit_ball_volume(dim()) * std::pow(radius, dim());
  return (hi - lo).prod();
}

bool Window::contains(const VectorXd& x) const {
  if (shape == Shape::Ball) return (x - center).squaredNorm() <= radius * radius;
  return (x.array() >= lo.array()).all() && (x.array() <= hi.array()).all();
}

bool Window::empty() const {
  if (shape == Shape::Ball) return radius <= 0.0;
  return ((hi - lo).array() <= 0.0).any();
}

Window Window::eroded(double eps) const {
  if (shape == Shape::Ball) return ball(center, std::max(radius - eps, 0.0));
  VectorXd l = lo.array() + eps, h = hi.array() - eps;
  for (Index i = 0; i < l.size(); ++i)
    if (h[i] < l[i]) l[i] = h[i] = center[i];
  Window w = box(l, h);
  w.center = center;
  return w;
}

VectorXd Window::sample_uniform(Rng& rng) const {
  const int d = dim();
  VectorXd x(d);
  if (shape == Shape::Box) {
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(lo[i], hi[i]);
    return x;
  }
  do {
    for (int i = 0; i < d; ++i) x[i] = rng.uniform(-1.0, 1.0);
  } while (x.squaredNorm() > 1.0);
  return center + radius * x;
}

PointPattern sample_poisson(const Window& window, double intensity, Rng& rng) {
  if (!(intensity >= 0.0)) throw std::invalid_argument("intensity must be nonnegative");
  const auto n = static_cast<Index>(rng.poisson(intensity * window.volume()));
  PointPattern p;
  p.window = window;
  p.intensity_hint = intensity;
  p.points.resize(n, window.dim());
  for (Index i = 0; i < n; ++i) p.points.row(i) = window.sample_uniform(rng).transpose();
  return p;
}

PointPattern restrict_to(const PointPattern& pattern, const Window& window) {
  std::vector<Index> keep;
  for (Index i = 0; i < pattern.size(); ++i)
    if (window.contains(pattern.points.row(i).transpose())) keep.push_back(i);
  PointPattern out;
  out.window = window;
  out.intensity_hint = pattern.intensity_hint;
  out.points.resize(static_cast<Index>(keep.size()), pattern.dim());
  for (std::size_t i = 0; i < keep.size(); ++i)
    out.points.row(static_cast<Index>(i)) = pattern.points.row(keep[i]);
  return out;
}

Index count_in_ball(const PointPattern& pattern, const VectorXd& c, double r) {
  Index n = 0;
  const double r2 = r * r;
  for (Index i = 0; i < pattern.size(); ++i)
    if ((pattern.points.row(i).transpose() - c).squaredNorm() <= r2) ++n;
  return n;
}

namespace {

struct CentreGrid {
  VectorXd origin;
  double step = 0.0;
  std::vector<long> extent;  // nodes per axis
  long total = 0;            // nodes inside the eroded window
};

CentreGrid make_grid(const Window& er, double step) {
  CentreGrid g;
  g.origin = er.lo;
  g.step = step;
  const int d = er.dim();
  g.extent.resize(d);
  for (int a = 0; a < d; ++a)
    g.extent[a] = static_cast<long>(std::floor((er.hi[a] - er.lo[a]) / step)) + 1;
  return g;
}

}  // namespace

double pair_in_ball_fraction(const PointPattern& pattern, double eps, int resolution) {
  if (!(eps > 0.0)) throw std::invalid_argument("eps must be positive");
  if (resolution < 1) throw std::invalid_argument("resolution must be >= 1");
  const Window er = pattern.window.eroded(eps);
  const int d = pattern.dim();
  if (er.empty()) {
    return count_in_ball(pattern, pattern.window.center, eps) >= 2 ? 1.0 : 0.0;
  }
  if (d > 3) throw std::invalid_argument("pair_in_ball_fraction supports d <= 3");
  const CentreGrid g = make_grid(er, eps / resolution);

  auto node = [&](const std::vector<long>& idx) {
    VectorXd c(d);
    for (int a = 0; a < d; ++a) c[a] = g.origin[a] + static_cast<double>(idx[a]) * g.step;
    return c;
  };

  // Denominator: grid nodes inside the eroded window.
  long total = 0;
  if (er.shape == Window::Shape::Box) {
    total = 1;
    for (long e : g.extent) total *= e;
  } else {
    // Count nodes per line along the last axis analytically.
    std::vector<long> idx(d, 0);
    while (true) {
      double r2 = er.radius * er.radius;
      for (int a = 0; a + 1 < d; ++a) {
        const double x = g.origin[a] + static_cast<double>(idx[a]) * g.step - er.center[a];
        r2 -= x * x;
      }
      if (r2 >= 0.0) {
        const double h = std::sqrt(r2);
        const int a = d - 1;
        const long l = std::max(0L, static_cast<long>(std::ceil((er.center[a] - h - g.origin[a]) / g.step)));
        const long u = std::min(g.extent[a] - 1,
                                static_cast<long>(std::floor((er.center[a] + h - g.origin[a]) / g.step)));
        if (u >= l) total += u - l + 1;
      }
      int a = 0;
      while (a + 1 < d && ++idx[a] == g.extent[a]) idx[a++] = 0;
      if (a + 1 >= d) break;
    }
  }
  if (total == 0) return 0.0;

  const double eps2 = eps * eps;
  std::unordered_set<long> hit;
  const Index n = pattern.size();
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      const VectorXd xi = pattern.points.row(i).transpose();
      const VectorXd xj = pattern.points.row(j).transpose();
      if ((xi - xj).squaredNorm() >= 4.0 * eps2) continue;
      std::vector<long> lo(d), hi(d);
      bool emptybox = false;
      for (int a = 0; a < d; ++a) {
        const double l = std::max(xi[a], xj[a]) - eps, h = std::min(xi[a], xj[a]) + eps;
        lo[a] = std::max(0L, static_cast<long>(std::ceil((l - g.origin[a]) / g.step)));
        hi[a] = std::min(g.extent[a] - 1, static_cast<long>(std::floor((h - g.origin[a]) / g.step)));
        if (hi[a] < lo[a]) emptybox = true;
      }
      if (emptybox) continue;
      std::vector<long> idx = lo;
      while (true) {
        const VectorXd c = node(idx);
        if ((c - xi).squaredNorm() <= eps2 && (c - xj).squaredNorm() <= eps2 && er.contains(c)) {
          long lin = 0;
          for (int a = d - 1; a >= 0; --a) lin = lin * g.extent[a] + idx[a];
          hit.insert(lin);
        }
        int a = 0;
        while (a < d && ++idx[a] > hi[a]) {
          idx[a] = lo[a];
          ++a;
        }
        if (a == d) break;
      }
    }
  }
  return static_cast<double>(hit.size()) / static_cast<double>(total);
}

}  // namespace negdep
