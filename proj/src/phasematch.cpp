#include "pdc/phasematch.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pdc/errors.hpp"
#include "pdc/rootfind.hpp"

namespace pdc::pm {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double conjugate_nm(double lambda_nm, double pump_nm) {
  return 1.0 / (1.0 / pump_nm - 1.0 / lambda_nm);
}

// Ordinary k_z without exceptions; NaN when evanescent or out of range.
double kz_or_nan(const ModeCoordinate& m, const CrystalConfig& crystal, double pump_nm) {
  double k;
  try {
    k = optics::signal_k(m.omega, crystal, pump_nm);
  } catch (const DomainError&) {
    return kNaN;
  }
  const double kz2 = k * k - m.qx * m.qx - m.qy * m.qy;
  return kz2 < 0.0 ? kNaN : std::sqrt(kz2);
}

template <typename F>
std::vector<double> refined_roots(F&& f, double lo, double hi, int samples, double x_tol,
                                  double f_tol) {
  std::vector<double> out;
  for (const auto& b : scan_brackets(f, lo, hi, samples)) {
    if (auto r = bisect(f, b.lo, b.hi, x_tol, f_tol)) out.push_back(*r);
  }
  return out;
}

double omega_at(double lambda_nm, const PumpPair& pumps) {
  return optics::signal_omega(lambda_nm, pumps.wavelength_nm);
}

}  // namespace

Mismatch::Mismatch(const PumpPair& pumps, const CrystalConfig& crystal)
    : pumps_(pumps),
      crystal_(crystal),
      waves_{optics::pump_wavevector(1, pumps, crystal),
             optics::pump_wavevector(2, pumps, crystal)} {}

double Mismatch::operator()(int j, const ModeCoordinate& mode) const {
  const auto& p = pump(j);
  double ks;
  try {
    ks = optics::signal_kz(mode, crystal_, pumps_.wavelength_nm);
  } catch (const EvanescentError& e) {
    throw EvanescentError(fmt::format("signal leg of D{}: {}", j, e.what()));
  }
  const ModeCoordinate idler{p.q - mode.qx, -mode.qy, -mode.omega};
  double ki;
  try {
    ki = optics::signal_kz(idler, crystal_, pumps_.wavelength_nm);
  } catch (const EvanescentError& e) {
    throw EvanescentError(fmt::format("idler leg of D{}: {}", j, e.what()));
  }
  return ks + ki - p.kz;
}

double Mismatch::or_nan(int j, const ModeCoordinate& mode) const {
  const auto& p = pump(j);
  const ModeCoordinate idler{p.q - mode.qx, -mode.qy, -mode.omega};
  return kz_or_nan(mode, crystal_, pumps_.wavelength_nm) +
         kz_or_nan(idler, crystal_, pumps_.wavelength_nm) - p.kz;
}

double mismatch_D(int pump_index, const ModeCoordinate& mode, const PumpPair& pumps,
                  const CrystalConfig& crystal) {
  return Mismatch(pumps, crystal)(pump_index, mode);
}

ModeCoordinate mode_from_external(double theta_x_ext, double theta_y_ext,
                                  double wavelength_nm, double pump_wavelength_nm) {
  const double k0 = k0_of_nm(wavelength_nm);
  return {k0 * std::sin(theta_x_ext), k0 * std::sin(theta_y_ext),
          optics::signal_omega(wavelength_nm, pump_wavelength_nm)};
}

namespace {

SurfacePoint make_point(const Mismatch& mm, int j, double lambda, double tx, double ty) {
  const auto m = mode_from_external(tx, ty, lambda, mm.pumps().wavelength_nm);
  return {lambda, rad_to_deg(tx), rad_to_deg(ty), j, mm.or_nan(1, m), mm.or_nan(2, m)};
}

double grid_value(double lo, double hi, int n, int i) {
  return n > 1 ? lo + (hi - lo) * i / (n - 1) : lo;
}

}  // namespace

SurfaceTrace trace_pm_surface(int j, const SurfaceGrid& g, double tol,
                              const PumpPair& pumps, const CrystalConfig& crystal) {
  const Mismatch mm(pumps, crystal);
  SurfaceTrace out;
  out.min_abs_d = std::numeric_limits<double>::infinity();
  for (int iy = 0; iy < g.n_theta_y; ++iy) {
    const double ty = deg_to_rad(grid_value(g.theta_y_min_deg, g.theta_y_max_deg, g.n_theta_y, iy));
    for (int ix = 0; ix < g.n_theta_x; ++ix) {
      const double tx =
          deg_to_rad(grid_value(g.theta_x_min_deg, g.theta_x_max_deg, g.n_theta_x, ix));
      auto f = [&](double lambda) {
        const double d = mm.or_nan(j, mode_from_external(tx, ty, lambda, pumps.wavelength_nm));
        if (std::isfinite(d)) out.min_abs_d = std::min(out.min_abs_d, std::abs(d));
        return d;
      };
      for (double lambda : refined_roots(f, g.band.min_nm, g.band.max_nm, g.n_lambda, 1e-10, tol)) {
        out.points.push_back(make_point(mm, j, lambda, tx, ty));
      }
    }
  }
  return out;
}

SurfaceTrace trace_pm_section(int j, const SurfaceGrid& g, double tol,
                              const PumpPair& pumps, const CrystalConfig& crystal) {
  const Mismatch mm(pumps, crystal);
  SurfaceTrace out;
  out.min_abs_d = std::numeric_limits<double>::infinity();
  auto track = [&](double d) {
    if (std::isfinite(d)) out.min_abs_d = std::min(out.min_abs_d, std::abs(d));
    return d;
  };
  const double tx_lo = deg_to_rad(g.theta_x_min_deg);
  const double tx_hi = deg_to_rad(g.theta_x_max_deg);
  for (int ix = 0; ix < g.n_theta_x; ++ix) {
    const double tx = grid_value(tx_lo, tx_hi, g.n_theta_x, ix);
    auto f = [&](double lambda) {
      return track(mm.or_nan(j, mode_from_external(tx, 0.0, lambda, pumps.wavelength_nm)));
    };
    for (double lambda : refined_roots(f, g.band.min_nm, g.band.max_nm, g.n_lambda, 1e-10, tol)) {
      out.points.push_back(make_point(mm, j, lambda, tx, 0.0));
    }
  }
  for (int il = 0; il < g.n_lambda; ++il) {
    const double lambda = grid_value(g.band.min_nm, g.band.max_nm, g.n_lambda, il);
    auto f = [&](double tx) {
      return track(mm.or_nan(j, mode_from_external(tx, 0.0, lambda, pumps.wavelength_nm)));
    };
    for (int ix = 0; ix < g.n_theta_x; ++ix) {
      const double tx = grid_value(tx_lo, tx_hi, g.n_theta_x, ix);
      if (std::abs(f(tx)) < tol) out.points.push_back(make_point(mm, j, lambda, tx, 0.0));
    }
    for (double tx : refined_roots(f, tx_lo, tx_hi, g.n_theta_x, 1e-13, tol)) {
      out.points.push_back(make_point(mm, j, lambda, tx, 0.0));
    }
  }
  std::sort(out.points.begin(), out.points.end(), [](const auto& a, const auto& b) {
    return a.lambda_nm != b.lambda_nm ? a.lambda_nm < b.lambda_nm
                                      : a.theta_x_ext_deg < b.theta_x_ext_deg;
  });
  return out;
}

std::vector<double> section_crossings(int j, double wavelength_nm, double tx_min,
                                      double tx_max, int samples, const PumpPair& pumps,
                                      const CrystalConfig& crystal) {
  const Mismatch mm(pumps, crystal);
  auto f = [&](double tx) {
    return mm.or_nan(j, mode_from_external(tx, 0.0, wavelength_nm, pumps.wavelength_nm));
  };
  return refined_roots(f, tx_min, tx_max, samples, 1e-14, 0.0);
}

double pump_rate(const PumpPair& pumps, const CrystalConfig& crystal) {
  const auto p1 = optics::pump_wavevector(1, pumps, crystal);
  const auto p2 = optics::pump_wavevector(2, pumps, crystal);
  if (p2.q == p1.q) {
    throw DomainError("pump rate undefined: the two pumps share the same transverse wave number");
  }
  return (p2.k - p1.k) / (p2.q - p1.q);
}

double shared_locus_qx(double omega, const Mismatch& mm) {
  const double ks = optics::signal_k(omega, mm.crystal(), mm.pumps().wavelength_nm);
  const double qmax = ks * std::sin(deg_to_rad(8.0));
  double nearest = std::numeric_limits<double>::infinity();
  auto g = [&](double q) {
    const ModeCoordinate m{q, 0.0, omega};
    const double d = mm.or_nan(1, m) - mm.or_nan(2, m);
    if (std::isfinite(d)) nearest = std::min(nearest, std::abs(d));
    return d;
  };
  const auto roots = refined_roots(g, -qmax, qmax, 64, 1e-15, 0.0);
  if (roots.empty()) {
    throw NotFoundError(fmt::format("shared locus D1 = D2 not bracketed at omega = {}", omega),
                        nearest);
  }
  return roots.front();
}

SharedMode shared_mode_position(double omega, const PumpPair& pumps,
                                const CrystalConfig& crystal) {
  const Mismatch mm(pumps, crystal);
  const double lambda = optics::signal_wavelength_nm(omega, pumps.wavelength_nm);
  const double no = crystal.dispersion.ordinary(lambda);
  const double ks_p = optics::signal_k(omega, crystal, pumps.wavelength_nm);
  const double ks_m = optics::signal_k(-omega, crystal, pumps.wavelength_nm);
  const double r = pump_rate(pumps, crystal);

  SharedMode out{};
  out.theta_x_int = 0.5 * (pumps.tilt_rad[0] + pumps.tilt_rad[1]) + r * ks_m / ks_p;
  out.theta_x_ext = optics::internal_to_external(out.theta_x_int, no);

  double qx = ks_p * std::sin(out.theta_x_int);
  try {
    qx = shared_locus_qx(omega, mm);
    out.theta_x_exact = std::asin(qx / ks_p);
  } catch (const NotFoundError&) {
  }
  auto d1 = [&](double qy) { return mm.or_nan(1, ModeCoordinate{qx, qy, omega}); };
  const double qy_max = ks_p * std::sin(deg_to_rad(8.0));
  if (auto qy = bisect(d1, 0.0, qy_max, 1e-15)) {
    out.theta_y_ext = std::asin(*qy / k0_of_nm(lambda));
  }
  return out;
}

CoupledModes coupled_mode_positions(double omega, const PumpPair& pumps,
                                    const CrystalConfig& crystal) {
  const double lambda = optics::signal_wavelength_nm(omega, pumps.wavelength_nm);
  const double no = crystal.dispersion.ordinary(lambda);
  const double ks = optics::signal_k(omega, crystal, pumps.wavelength_nm);
  const double k1 = optics::pump_wavevector(1, pumps, crystal).k;
  const double k2 = optics::pump_wavevector(2, pumps, crystal).k;
  const double kp = 0.5 * (k1 + k2);
  const double r = pump_rate(pumps, crystal);
  const double mid = 0.5 * (pumps.tilt_rad[0] + pumps.tilt_rad[1]);
  const double half = 0.5 * (pumps.tilt_rad[0] - pumps.tilt_rad[1]) * kp / ks;

  CoupledModes out{};
  out.theta1_int = mid + half - r;
  out.theta2_int = mid - half - r;
  out.theta1_ext = optics::internal_to_external(out.theta1_int, no);
  out.theta2_ext = optics::internal_to_external(out.theta2_int, no);
  return out;
}

SharedHotspots shared_hotspots(const PumpPair& pumps, const CrystalConfig& crystal,
                               const Band& band, int samples) {
  const Mismatch mm(pumps, crystal);
  double nearest = std::numeric_limits<double>::infinity();
  auto h = [&](double omega) {
    try {
      const double q = shared_locus_qx(omega, mm);
      const double d = mm.or_nan(1, ModeCoordinate{q, 0.0, omega});
      if (std::isfinite(d)) nearest = std::min(nearest, std::abs(d));
      return d;
    } catch (const NotFoundError&) {
      return kNaN;
    }
  };
  const double w_lo = omega_at(band.max_nm, pumps);
  const double w_hi = omega_at(band.min_nm, pumps);
  const auto roots = refined_roots(h, w_lo, w_hi, samples, 1e-13, 0.0);
  if (roots.empty()) {
    throw NotFoundError(
        fmt::format("no shared mode (D1 = D2 = 0) in {}-{} nm; min |D1| on the shared "
                    "locus is {:.3e} rad/um",
                    band.min_nm, band.max_nm, nearest),
        nearest);
  }
  SharedHotspots out;
  for (double w : roots) {
    const double lambda = optics::signal_wavelength_nm(w, pumps.wavelength_nm);
    const double q = shared_locus_qx(w, mm);
    out.roots.push_back({lambda, std::asin(q / k0_of_nm(lambda)),
                         conjugate_nm(lambda, pumps.wavelength_nm)});
  }
  std::sort(out.roots.begin(), out.roots.end(),
            [](const auto& a, const auto& b) { return a.lambda_nm < b.lambda_nm; });
  out.signal_nm = out.roots.front().lambda_nm;
  out.idler_nm = out.roots.front().conjugate_nm;
  out.idler_exact_nm = out.roots.back().lambda_nm;
  return out;
}

ModeFamily sample_mode_family(const PumpPair& pumps, const CrystalConfig& crystal,
                              const Band& band, int samples, double tol) {
  ModeFamily fam;
  for (int i = 0; i < samples; ++i) {
    const double lambda = grid_value(band.min_nm, band.max_nm, samples, i);
    const double w = omega_at(lambda, pumps);
    const auto s = shared_mode_position(w, pumps, crystal);
    const auto c = coupled_mode_positions(w, pumps, crystal);
    fam.lambda_nm.push_back(lambda);
    fam.theta0_ext.push_back(s.theta_x_ext);
    fam.theta1_ext.push_back(c.theta1_ext);
    fam.theta2_ext.push_back(c.theta2_ext);
    fam.max_gap01 = std::max(fam.max_gap01, std::abs(s.theta_x_int - c.theta1_int));
    fam.max_gap02 = std::max(fam.max_gap02, std::abs(s.theta_x_int - c.theta2_int));
  }
  fam.tag = std::min(fam.max_gap01, fam.max_gap02) < tol ? FamilyTag::quadruplet
                                                         : FamilyTag::triplet;
  return fam;
}

std::string to_string(ResonanceBranch b) {
  return b == ResonanceBranch::collinear_noncollinear ? "collinear-noncollinear"
                                                      : "collinear-nondegenerate";
}

ResonanceResult find_resonance(const optics::ExternalPumps& ext, const CrystalConfig& base,
                               double beta_min, double beta_max, double step,
                               double beta_tol) {
  if (!(step > 0.0) || !(beta_max > beta_min)) {
    throw DomainError("resonance scan needs beta_max > beta_min and a positive step");
  }
  auto at = [&](double beta) {
    CrystalConfig c = base;
    c.rotation_rad = beta;
    return std::pair{c, optics::resolve_pumps(ext, c)};
  };
  auto residual = [&](double beta, double sign) {
    const auto [c, p] = at(beta);
    return pump_rate(p, c) + sign * 0.5 * (p.tilt_rad[1] - p.tilt_rad[0]);
  };

  ResonanceResult out;
  const int n = static_cast<int>(std::floor((beta_max - beta_min) / step + 1e-9)) + 1;
  for (int i = 0; i < n; ++i) {
    const double b = beta_min + i * step;
    out.trace.push_back({b, residual(b, 1.0), residual(b, -1.0)});
  }

  for (double sign : {1.0, -1.0}) {
    auto f = [&](double b) { return residual(b, sign); };
    for (int i = 0; i + 1 < n; ++i) {
      const double a = out.trace[i].beta_rad;
      const double b = out.trace[i + 1].beta_rad;
      const double fa = sign > 0 ? out.trace[i].minus : out.trace[i].plus;
      const double fb = sign > 0 ? out.trace[i + 1].minus : out.trace[i + 1].plus;
      if (std::signbit(fa) == std::signbit(fb)) continue;
      const auto root = bisect(f, a, b, beta_tol);
      if (!root) continue;
      const auto [c, p] = at(*root);
      const int tilted = std::abs(p.tilt_rad[1]) >= std::abs(p.tilt_rad[0]) ? 2 : 1;
      const Mismatch mm(p, c);
      const double d = mm.or_nan(tilted, ModeCoordinate{0.5 * mm.pump(tilted).q, 0.0, 0.0});
      const auto branch = d > 0.0 ? ResonanceBranch::collinear_noncollinear
                                  : ResonanceBranch::collinear_nondegenerate;
      out.roots.push_back({*root, branch, 1, pump_rate(p, c)});
    }
  }
  std::sort(out.roots.begin(), out.roots.end(),
            [](const auto& a, const auto& b) { return a.beta_rad > b.beta_rad; });
  for (std::size_t i = 1; i < out.roots.size();) {
    if (std::abs(out.roots[i].beta_rad - out.roots[i - 1].beta_rad) <= 2.0 * beta_tol) {
      out.roots[i - 1].multiplicity += out.roots[i].multiplicity;
      out.roots.erase(out.roots.begin() + static_cast<std::ptrdiff_t>(i));
    } else {
      ++i;
    }
  }
  return out;
}

}  // namespace pdc::pm
