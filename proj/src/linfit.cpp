#include "pdc/linfit.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <boost/math/distributions/students_t.hpp>

#include "pdc/errors.hpp"

namespace pdc {

LineFit fit_line(std::span<const double> x, std::span<const double> y,
                 std::span<const double> w) {
  const std::size_t n = x.size();
  if (n != y.size() || (!w.empty() && w.size() != n)) {
    throw NumericError("fit_line: mismatched input lengths");
  }
  if (n < 2) throw NumericError("fit_line: need at least two points");
  double sw = 0, sx = 0, sy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sw += wi;
    sx += wi * x[i];
    sy += wi * y[i];
  }
  const double mx = sx / sw;
  const double my = sy / sw;
  double sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double wi = w.empty() ? 1.0 : w[i];
    sxx += wi * (x[i] - mx) * (x[i] - mx);
    sxy += wi * (x[i] - mx) * (y[i] - my);
  }
  if (!(sxx > 0.0)) throw NumericError("fit_line: abscissae are all equal");
  LineFit f;
  f.slope = sxy / sxx;
  f.intercept = my - f.slope * mx;
  f.dof = static_cast<int>(n) - 2;
  if (f.dof > 0) {
    double ssr = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const double wi = w.empty() ? 1.0 : w[i];
      const double r = y[i] - f.intercept - f.slope * x[i];
      ssr += wi * r * r;
    }
    f.slope_se = std::sqrt(ssr / f.dof / sxx);
  }
  return f;
}

double t_quantile(int dof, double confidence) {
  if (dof < 1) return std::numeric_limits<double>::infinity();
  boost::math::students_t dist(dof);
  return boost::math::quantile(boost::math::complement(dist, 0.5 * (1.0 - confidence)));
}

RatioEstimate slope_ratio(const LineFit& num, const LineFit& den, double confidence) {
  if (den.slope == 0.0) throw NumericError("slope_ratio: reference slope is zero");
  RatioEstimate r;
  r.value = num.slope / den.slope;
  const double rel_n = num.slope != 0.0 ? num.slope_se / num.slope : 0.0;
  const double rel_d = den.slope_se / den.slope;
  const double sigma = std::abs(r.value) * std::hypot(rel_n, rel_d);
  const int dof = std::min(num.dof, den.dof);
  const double t = sigma > 0.0 ? t_quantile(dof, confidence) : 0.0;
  r.ci_low = r.value - t * sigma;
  r.ci_high = r.value + t * sigma;
  return r;
}

}  // namespace pdc
