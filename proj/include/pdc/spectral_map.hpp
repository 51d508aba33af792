#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "pdc/units.hpp"

namespace pdc {

// Intensity on the native (omega, q_x) lattice of a simulation. Rows are
// ordered by ascending wavelength, columns by ascending q_x. External angles
// follow from q_x = k0(lambda) sin(theta_ext).
struct SpectralMap {
  std::vector<double> lambda_nm;  // per row
  std::vector<double> qx;         // per column, rad/um
  std::vector<double> data;       // row-major, rows x cols
  double pump_wavelength_nm = 352.0;

  std::size_t rows() const { return lambda_nm.size(); }
  std::size_t cols() const { return qx.size(); }
  double& at(std::size_t r, std::size_t c) { return data[r * cols() + c]; }
  double at(std::size_t r, std::size_t c) const { return data[r * cols() + c]; }

  // NaN beyond grazing incidence.
  double theta_x_ext(std::size_t r, std::size_t c) const {
    const double s = qx[c] / k0_of_nm(lambda_nm[r]);
    return std::abs(s) <= 1.0 ? std::asin(s) : std::nan("");
  }
  double total() const {
    double t = 0.0;
    for (double v : data) t += v;
    return t;
  }
};

}  // namespace pdc
