#pragma once

#include <cmath>
#include <functional>
#include <optional>
#include <vector>

namespace pdc {

struct Bracket {
  double lo;
  double hi;
};

// Bisection on a sign-changing bracket. Stops when |f| <= f_tol or the
// bracket is narrower than x_tol. Returns nullopt if f(lo), f(hi) share sign.
template <typename F>
std::optional<double> bisect(F&& f, double lo, double hi, double x_tol,
                             double f_tol = 0.0, int max_iter = 200) {
  double flo = f(lo);
  double fhi = f(hi);
  if (flo == 0.0) return lo;
  if (fhi == 0.0) return hi;
  if (std::signbit(flo) == std::signbit(fhi)) return std::nullopt;
  for (int i = 0; i < max_iter; ++i) {
    const double mid = 0.5 * (lo + hi);
    const double fm = f(mid);
    if (fm == 0.0 || std::abs(fm) <= f_tol || 0.5 * (hi - lo) <= x_tol) return mid;
    if (std::signbit(fm) == std::signbit(flo)) {
      lo = mid;
      flo = fm;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

// Samples f on a uniform grid and returns every interval with a sign change.
// Non-finite samples break brackets.
template <typename F>
std::vector<Bracket> scan_brackets(F&& f, double lo, double hi, int samples) {
  std::vector<Bracket> out;
  double x_prev = lo;
  double f_prev = f(lo);
  for (int i = 1; i < samples; ++i) {
    const double x = lo + (hi - lo) * i / (samples - 1);
    const double fx = f(x);
    if (std::isfinite(f_prev) && std::isfinite(fx) &&
        std::signbit(f_prev) != std::signbit(fx)) {
      out.push_back({x_prev, x});
    }
    x_prev = x;
    f_prev = fx;
  }
  return out;
}

}  // namespace pdc
