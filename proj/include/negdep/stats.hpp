#ifndef NEGDEP_STATS_HPP
#define NEGDEP_STATS_HPP

#include <vector>

#include "negdep/common.hpp"

namespace negdep::stats {

struct ChiSquareResult {
  double statistic = 0.0;
  int dof = 0;
  double p_value = 1.0;
};

/// Pearson goodness-of-fit of observed counts against expected
/// probabilities. Cells with expected count below `min_expected` are pooled.
/// Observations in zero-probability cells make the p-value 0.
ChiSquareResult chi_square_gof(const std::vector<double>& counts,
                               const std::vector<double>& probs,
                               double min_expected = 5.0);

/// Upper tail of the chi-square distribution.
double chi_square_sf(double x, int dof);

double total_variation(const std::vector<double>& p, const std::vector<double>& q);

double mean(const std::vector<double>& x);
/// Unbiased sample variance.
double variance(const std::vector<double>& x);

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

/// Ordinary least squares y = intercept + slope * x.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

/// Slope of log(y) against log(x). Non-positive y values are rejected.
LineFit fit_loglog(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace negdep::stats

#endif
