#include "negdep/stats.hpp"

#include <cmath>
#include <numeric>

#include <boost/math/special_functions/gamma.hpp>

namespace negdep::stats {

double chi_square_sf(double x, int dof) {
  if (dof <= 0) return 1.0;
  if (x <= 0.0) return 1.0;
  return boost::math::gamma_q(0.5 * dof, 0.5 * x);
}

ChiSquareResult chi_square_gof(const std::vector<double>& counts,
                               const std::vector<double>& probs,
                               double min_expected) {
  if (counts.size() != probs.size())
    throw std::invalid_argument("chi_square_gof: size mismatch");
  const double n = std::accumulate(counts.begin(), counts.end(), 0.0);
  ChiSquareResult res;
  if (n <= 0.0) return res;

  double stat = 0.0;
  int cells = 0;
  double pool_obs = 0.0, pool_exp = 0.0;
  for (std::size_t i = 0; i < counts.size(); ++i) {
    const double e = n * std::max(probs[i], 0.0);
    if (e <= 1e-12 * n) {
      if (counts[i] > 0) {
        res.statistic = INFINITY;
        res.p_value = 0.0;
        return res;
      }
      continue;
    }
    if (e < min_expected) {
      pool_obs += counts[i];
      pool_exp += e;
      continue;
    }
    stat += (counts[i] - e) * (counts[i] - e) / e;
    ++cells;
  }
  if (pool_exp > 0.0) {
    stat += (pool_obs - pool_exp) * (pool_obs - pool_exp) / pool_exp;
    ++cells;
  }
  res.statistic = stat;
  res.dof = cells - 1;
  res.p_value = chi_square_sf(stat, res.dof);
  return res;
}

double total_variation(const std::vector<double>& p, const std::vector<double>& q) {
  if (p.size() != q.size()) throw std::invalid_argument("total_variation: size mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) s += std::abs(p[i] - q[i]);
  return 0.5 * s;
}

double mean(const std::vector<double>& x) {
  if (x.empty()) throw std::invalid_argument("mean: empty input");
  return std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(x.size());
}

double variance(const std::vector<double>& x) {
  if (x.size() < 2) throw std::invalid_argument("variance: need at least two values");
  const double m = mean(x);
  double s = 0.0;
  for (double v : x) s += (v - m) * (v - m);
  return s / static_cast<double>(x.size() - 1);
}

LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2)
    throw std::invalid_argument("fit_line: need at least two paired values");
  const double mx = mean(x), my = mean(y);
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx <= 0.0) throw std::invalid_argument("fit_line: degenerate abscissae");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  return f;
}

LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y) {
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (!(x[i] > 0.0) || !(y[i] > 0.0))
      throw std::invalid_argument("fit_loglog: values must be positive");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  return fit_line(lx, ly);
}

}  // namespace negdep::stats
