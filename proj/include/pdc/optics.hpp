#pragma once

#include <array>

#include <Eigen/Core>

namespace pdc::optics {

// n^2(lambda) = a + b / (lambda^2 - c) - d * lambda^2, lambda in um.
struct SellmeierTerms {
  double a = 1.0;
  double b = 0.0;
  double c = 0.0;
  double d = 0.0;

  double index_squared(double lambda_um) const {
    const double l2 = lambda_um * lambda_um;
    return a + b / (l2 - c) - d * l2;
  }
};

// Principal indices of a uniaxial crystal over a declared wavelength range.
class SellmeierSet {
 public:
  // Throws DomainError if either index leaves (1, 3) anywhere in range.
  SellmeierSet(SellmeierTerms ordinary, SellmeierTerms extraordinary,
               double min_um, double max_um);

  // beta-BaB2O4, Kato (1986).
  static SellmeierSet bbo_kato1986();
  // n = 1 for both polarizations.
  static SellmeierSet vacuum();

  double ordinary(double wavelength_nm) const;
  double extraordinary_principal(double wavelength_nm) const;

  const SellmeierTerms& ordinary_terms() const { return ordinary_; }
  const SellmeierTerms& extraordinary_terms() const { return extraordinary_; }
  double min_um() const { return min_um_; }
  double max_um() const { return max_um_; }

 private:
  void check_range(double wavelength_nm) const;

  SellmeierTerms ordinary_;
  SellmeierTerms extraordinary_;
  double min_um_;
  double max_um_;
};

struct CrystalConfig {
  double cut_rad = 0.0;         // optic axis vs facet normal z at rotation 0
  double length_um = 4000.0;
  double rotation_rad = 0.0;    // beta, in the facet (x, y) plane
  SellmeierSet dispersion = SellmeierSet::bbo_kato1986();

  // Throws ConfigError on violated invariants.
  void validate() const;
};

struct BeamParams {
  double waist_um = 297.0;       // 1/e field radius
  double duration_fs = 1200.0;   // intensity FWHM
  double energy_uj = 35.0;
};

// Two plane-wave pumps in the (x, z) plane. Tilts are internal angles;
// transverse wave numbers are always derived, never stored.
struct PumpPair {
  double wavelength_nm = 352.0;
  std::array<double, 2> tilt_rad{0.0, 0.0};
  std::array<BeamParams, 2> beams{};
};

// Pumps given by external incidence angles at the entrance facet. The
// internal tilts depend on the crystal orientation through the
// extraordinary index, so they are resolved per crystal.
struct ExternalPumps {
  double wavelength_nm = 352.0;
  std::array<double, 2> tilt_ext_rad{0.0, 0.0};
  std::array<BeamParams, 2> beams{};
};

PumpPair resolve_pumps(const ExternalPumps& ext, const CrystalConfig& crystal);

struct PumpWave {
  double k = 0.0;   // |k|, rad/um
  double kz = 0.0;
  double q = 0.0;   // transverse (x) component
};

// Signal-mode coordinates: transverse wave vector and frequency offset from
// the degenerate carrier omega_p / 2. The idler of a mode sits at -omega.
struct ModeCoordinate {
  double qx = 0.0;     // rad/um
  double qy = 0.0;     // rad/um
  double omega = 0.0;  // rad/fs
};

double ordinary_index(const SellmeierSet& s, double wavelength_nm);

// Index-ellipsoid extraordinary index for a wave normal at angle
// axis_angle_rad from the optic axis.
double extraordinary_index(const SellmeierSet& s, double wavelength_nm,
                           double axis_angle_rad);

// Cut angle for which the on-axis extraordinary pump phase-matches collinear
// degenerate type-I (e -> o + o) down-conversion. Solved by bisection.
double phase_matched_cut(const SellmeierSet& s, double pump_wavelength_nm);

// Lab-frame unit vector of the optic axis. Positive rotation turns the
// azimuth from +y toward -x.
Eigen::Vector3d optic_axis_direction(const CrystalConfig& crystal);

// Wave vector of pump j (1 or 2) along its internal propagation direction.
PumpWave pump_wavevector(int pump_index, const PumpPair& pumps,
                         const CrystalConfig& crystal);

// Exact longitudinal wave number of an extraordinary wave with transverse
// components (qx, qy): root of the index-ellipsoid quadratic in kz.
double extraordinary_kz(const CrystalConfig& crystal, double wavelength_nm,
                        double qx, double qy);

// Flat-facet refraction, sin(ext) = n sin(int).
double external_to_internal(double theta_ext, double n);
// Throws DomainError on total internal reflection.
double internal_to_external(double theta_int, double n);

// Internal tilt of an extraordinary pump entering the facet at theta_ext in
// the (x, z) plane, from transverse-momentum conservation.
double extraordinary_internal_tilt(double theta_ext, double wavelength_nm,
                                   const CrystalConfig& crystal);

// Frequency bookkeeping for the degenerate signal band.
double carrier_omega(double pump_wavelength_nm);
double signal_wavelength_nm(double omega, double pump_wavelength_nm);
double signal_omega(double wavelength_nm, double pump_wavelength_nm);

// Ordinary wave number k_s(omega) in the crystal.
double signal_k(double omega, const CrystalConfig& crystal,
                double pump_wavelength_nm);

// sqrt(k_s^2 - qx^2 - qy^2); throws EvanescentError when negative.
double signal_kz(const ModeCoordinate& mode, const CrystalConfig& crystal,
                 double pump_wavelength_nm);

// Internal / external far-field angle of a mode along x.
double mode_theta_x_internal(const ModeCoordinate& mode, const CrystalConfig& crystal,
                             double pump_wavelength_nm);
double mode_theta_x_external(const ModeCoordinate& mode, double pump_wavelength_nm);

}  // namespace pdc::optics
