#ifndef NEGDEP_POINT_PATTERN_HPP
#define NEGDEP_POINT_PATTERN_HPP

#include "negdep/common.hpp"
#include "negdep/random.hpp"

namespace negdep {

/// Observation window: axis-aligned box or Euclidean ball.
struct Window {
  enum class Shape { Box, Ball };
  Shape shape = Shape::Box;
  VectorXd lo, hi;   // box corners, also the bounding box of a ball
  VectorXd center;
  double radius = 0.0;

  static Window box(VectorXd lo, VectorXd hi);
  static Window cube(int d, double side);  // [0, side]^d
  static Window ball(VectorXd center, double radius);

  int dim() const { return static_cast<int>(lo.size()); }
  double volume() const;
  bool contains(const VectorXd& x) const;
  /// Points whose eps-ball lies inside the window. Empty windows have volume 0.
  Window eroded(double eps) const;
  bool empty() const;
  VectorXd sample_uniform(Rng& rng) const;
};

/// Points stored as rows.
struct PointPattern {
  MatrixXd points;
  Window window;
  double intensity_hint = 0.0;

  Index size() const { return points.rows(); }
  int dim() const { return static_cast<int>(points.cols()); }
};

double unit_ball_volume(int d);

/// Homogeneous Poisson process in the window.
PointPattern sample_poisson(const Window& window, double intensity, Rng& rng);

/// Keep only the points inside `window`.
PointPattern restrict_to(const PointPattern& pattern, const Window& window);

/// Number of points inside the closed ball B(c, r).
Index count_in_ball(const PointPattern& pattern, const VectorXd& c, double r);

/// Fraction of ball centres c in the eroded window for which B(c, eps) holds
/// at least two points. Centres form a grid of spacing eps / resolution.
/// When the eroded window is degenerate the single window centre is used.
double pair_in_ball_fraction(const PointPattern& pattern, double eps, int resolution = 16);

}  // namespace negdep

#endif
