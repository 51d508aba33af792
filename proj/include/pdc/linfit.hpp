#pragma once

#include <span>
#include <vector>

namespace pdc {

struct LineFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_se = 0.0;  // standard error from residuals
  int dof = 0;
};

// Weighted least squares y = intercept + slope * x. Empty weights mean unit
// weights. Needs at least two points.
LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w = {});

// Two-sided Student-t quantile for the given confidence level.
double t_quantile(int dof, double confidence);

struct RatioEstimate {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// Ratio of slopes with first-order error propagation.
RatioEstimate slope_ratio(const LineFit& num, const LineFit& den, double confidence);

}  // namespace pdc
