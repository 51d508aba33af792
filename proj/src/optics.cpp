#include "pdc/optics.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include <fmt/format.h>

#include "pdc/errors.hpp"
#include "pdc/rootfind.hpp"
#include "pdc/units.hpp"

namespace pdc::optics {

SellmeierSet::SellmeierSet(SellmeierTerms ordinary, SellmeierTerms extraordinary,
                           double min_um, double max_um)
    : ordinary_(ordinary), extraordinary_(extraordinary), min_um_(min_um), max_um_(max_um) {
  if (!(min_um > 0.0) || !(max_um > min_um)) {
    throw DomainError(fmt::format("invalid Sellmeier range [{}, {}] um", min_um, max_um));
  }
  constexpr int kSamples = 256;
  for (int i = 0; i < kSamples; ++i) {
    const double l = min_um + (max_um - min_um) * i / (kSamples - 1);
    for (const auto* terms : {&ordinary_, &extraordinary_}) {
      const double n2 = terms->index_squared(l);
      if (!std::isfinite(n2) || n2 < 1.0 || n2 >= 9.0) {
        throw DomainError(fmt::format(
            "Sellmeier index leaves [1, 3) at {:.4f} um (n^2 = {})", l, n2));
      }
    }
  }
}

SellmeierSet SellmeierSet::bbo_kato1986() {
  return SellmeierSet({2.7359, 0.01878, 0.01822, 0.01354},
                      {2.3753, 0.01224, 0.01667, 0.01516}, 0.205, 2.0);
}

SellmeierSet SellmeierSet::vacuum() {
  return SellmeierSet({1.0, 0.0, 0.0, 0.0}, {1.0, 0.0, 0.0, 0.0}, 0.1, 10.0);
}

void SellmeierSet::check_range(double wavelength_nm) const {
  const double l = wavelength_nm * 1e-3;
  if (!(l >= min_um_ && l <= max_um_)) {
    throw DomainError(fmt::format("wavelength {} nm outside dispersion range [{}, {}] nm",
                                  wavelength_nm, min_um_ * 1e3, max_um_ * 1e3));
  }
}

double SellmeierSet::ordinary(double wavelength_nm) const {
  check_range(wavelength_nm);
  return std::sqrt(ordinary_.index_squared(wavelength_nm * 1e-3));
}

double SellmeierSet::extraordinary_principal(double wavelength_nm) const {
  check_range(wavelength_nm);
  return std::sqrt(extraordinary_.index_squared(wavelength_nm * 1e-3));
}

void CrystalConfig::validate() const {
  if (!(cut_rad > 0.0 && cut_rad < kPi / 2)) {
    throw ConfigError("/crystal/cut_deg", "cut angle must lie in (0, 90) degrees");
  }
  if (!(length_um > 0.0)) {
    throw ConfigError("/crystal/length_mm", "crystal length must be positive");
  }
  if (!std::isfinite(rotation_rad)) {
    throw ConfigError("/crystal/rotation_deg", "rotation must be finite");
  }
}

double ordinary_index(const SellmeierSet& s, double wavelength_nm) {
  return s.ordinary(wavelength_nm);
}

double extraordinary_index(const SellmeierSet& s, double wavelength_nm,
                           double axis_angle_rad) {
  const double no = s.ordinary(wavelength_nm);
  const double ne = s.extraordinary_principal(wavelength_nm);
  const double c = std::cos(axis_angle_rad);
  const double sn = std::sin(axis_angle_rad);
  return 1.0 / std::sqrt(c * c / (no * no) + sn * sn / (ne * ne));
}

double phase_matched_cut(const SellmeierSet& s, double pump_wavelength_nm) {
  const double target = s.ordinary(2.0 * pump_wavelength_nm);
  auto f = [&](double theta) {
    return extraordinary_index(s, pump_wavelength_nm, theta) - target;
  };
  const auto root = bisect(f, 0.0, kPi / 2, 1e-15);
  if (!root) {
    throw NotFoundError("no type-I collinear phase-matching angle for this pump",
                        std::min(std::abs(f(0.0)), std::abs(f(kPi / 2))));
  }
  return *root;
}

Eigen::Vector3d optic_axis_direction(const CrystalConfig& crystal) {
  const double s = std::sin(crystal.cut_rad);
  const double c = std::cos(crystal.cut_rad);
  return {-s * std::sin(crystal.rotation_rad), s * std::cos(crystal.rotation_rad), c};
}

PumpWave pump_wavevector(int pump_index, const PumpPair& pumps,
                         const CrystalConfig& crystal) {
  if (pump_index != 1 && pump_index != 2) {
    throw std::invalid_argument("pump index must be 1 or 2");
  }
  const double theta = pumps.tilt_rad[pump_index - 1];
  const Eigen::Vector3d u(std::sin(theta), 0.0, std::cos(theta));
  const double cos_axis = std::clamp(u.dot(optic_axis_direction(crystal)), -1.0, 1.0);
  const double n = extraordinary_index(crystal.dispersion, pumps.wavelength_nm,
                                       std::acos(cos_axis));
  const double k = n * k0_of_nm(pumps.wavelength_nm);
  return {k, k * std::cos(theta), k * std::sin(theta)};
}

double extraordinary_kz(const CrystalConfig& crystal, double wavelength_nm,
                        double qx, double qy) {
  const double no = crystal.dispersion.ordinary(wavelength_nm);
  const double ne = crystal.dispersion.extraordinary_principal(wavelength_nm);
  const double k0 = k0_of_nm(wavelength_nm);
  const Eigen::Vector3d a = optic_axis_direction(crystal);
  const double inv_o = 1.0 / (no * no);
  const double inv_e = 1.0 / (ne * ne);
  const double d = inv_o - inv_e;
  const double p = qx * a.x() + qy * a.y();
  const double q2 = qx * qx + qy * qy;
  // (p + kz a_z)^2 d + (q^2 + kz^2) / ne^2 = k0^2
  const double qa = a.z() * a.z() * d + inv_e;
  const double qb = 2.0 * p * a.z() * d;
  const double qc = p * p * d + q2 * inv_e - k0 * k0;
  const double disc = qb * qb - 4.0 * qa * qc;
  if (!(qc < 0.0) || disc < 0.0) {
    throw EvanescentError(fmt::format(
        "extraordinary wave at {} nm with q = ({}, {}) rad/um is evanescent",
        wavelength_nm, qx, qy));
  }
  const double sq = std::sqrt(disc);
  const double s = -0.5 * (qb + std::copysign(sq, qb));
  return std::max(s / qa, qc / s);
}

double external_to_internal(double theta_ext, double n) {
  if (!(std::abs(theta_ext) < kPi / 2)) {
    throw DomainError("external angle must satisfy |theta| < 90 degrees");
  }
  return std::asin(std::sin(theta_ext) / n);
}

double internal_to_external(double theta_int, double n) {
  const double s = n * std::sin(theta_int);
  if (std::abs(s) > 1.0) {
    throw DomainError(fmt::format(
        "total internal reflection: n sin(theta) = {:.6f} exceeds 1", s));
  }
  return std::asin(s);
}

double extraordinary_internal_tilt(double theta_ext, double wavelength_nm,
                                   const CrystalConfig& crystal) {
  const double q = k0_of_nm(wavelength_nm) * std::sin(theta_ext);
  const double kz = extraordinary_kz(crystal, wavelength_nm, q, 0.0);
  return std::atan2(q, kz);
}

PumpPair resolve_pumps(const ExternalPumps& ext, const CrystalConfig& crystal) {
  PumpPair out;
  out.wavelength_nm = ext.wavelength_nm;
  out.beams = ext.beams;
  for (int j = 0; j < 2; ++j) {
    out.tilt_rad[j] = extraordinary_internal_tilt(ext.tilt_ext_rad[j], ext.wavelength_nm, crystal);
  }
  return out;
}

double carrier_omega(double pump_wavelength_nm) {
  return 0.5 * omega_of_nm(pump_wavelength_nm);
}

double signal_wavelength_nm(double omega, double pump_wavelength_nm) {
  const double w = carrier_omega(pump_wavelength_nm) + omega;
  if (!(w > 0.0)) {
    throw DomainError(fmt::format("frequency offset {} rad/fs leaves the optical band", omega));
  }
  return nm_of_omega(w);
}

double signal_omega(double wavelength_nm, double pump_wavelength_nm) {
  return omega_of_nm(wavelength_nm) - carrier_omega(pump_wavelength_nm);
}

double signal_k(double omega, const CrystalConfig& crystal, double pump_wavelength_nm) {
  const double lambda = signal_wavelength_nm(omega, pump_wavelength_nm);
  const double w = carrier_omega(pump_wavelength_nm) + omega;
  return w / kSpeedOfLight * crystal.dispersion.ordinary(lambda);
}

double signal_kz(const ModeCoordinate& mode, const CrystalConfig& crystal,
                 double pump_wavelength_nm) {
  const double k = signal_k(mode.omega, crystal, pump_wavelength_nm);
  const double kz2 = k * k - mode.qx * mode.qx - mode.qy * mode.qy;
  if (kz2 < 0.0) {
    throw EvanescentError(fmt::format(
        "signal mode q = ({}, {}) rad/um at {:.2f} nm is evanescent", mode.qx, mode.qy,
        signal_wavelength_nm(mode.omega, pump_wavelength_nm)));
  }
  return std::sqrt(kz2);
}

double mode_theta_x_internal(const ModeCoordinate& mode, const CrystalConfig& crystal,
                             double pump_wavelength_nm) {
  const double k = signal_k(mode.omega, crystal, pump_wavelength_nm);
  return std::asin(std::clamp(mode.qx / k, -1.0, 1.0));
}

double mode_theta_x_external(const ModeCoordinate& mode, double pump_wavelength_nm) {
  const double k0 = k0_of_nm(signal_wavelength_nm(mode.omega, pump_wavelength_nm));
  if (std::abs(mode.qx) > k0) {
    throw DomainError("mode is totally internally reflected at the exit facet");
  }
  return std::asin(mode.qx / k0);
}

}  // namespace pdc::optics
