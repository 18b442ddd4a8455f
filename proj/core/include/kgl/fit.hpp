#pragma once

#include <vector>

namespace kgl {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
};

// Ordinary least squares y = slope*x + intercept.
LineFit fit_line(const std::vector<double>& x, const std::vector<double>& y);

// Slope of log(y) against log(x); pairs with y <= 0 are skipped.
double loglog_slope(const std::vector<double>& x, const std::vector<double>& y);

}  // namespace kgl
