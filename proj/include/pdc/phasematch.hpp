#pragma once

#include <array>
#include <optional>
#include <string>
#include <vector>

#include "pdc/optics.hpp"
#include "pdc/units.hpp"

namespace pdc::pm {

using optics::CrystalConfig;
using optics::ModeCoordinate;
using optics::PumpPair;

struct Band {
  double min_nm = 550.0;
  double max_nm = 850.0;
};

// Longitudinal mismatch D_j = k_sz(q, W) + k_sz(Q_j - q, -W) - k_jz with the
// pump wave vectors evaluated once.
class Mismatch {
 public:
  Mismatch(const PumpPair& pumps, const CrystalConfig& crystal);

  // Throws EvanescentError naming the failing leg.
  double operator()(int pump_index, const ModeCoordinate& mode) const;
  // NaN instead of throwing, for scans.
  double or_nan(int pump_index, const ModeCoordinate& mode) const;

  const optics::PumpWave& pump(int pump_index) const { return waves_.at(pump_index - 1); }
  const PumpPair& pumps() const { return pumps_; }
  const CrystalConfig& crystal() const { return crystal_; }

 private:
  PumpPair pumps_;
  CrystalConfig crystal_;
  std::array<optics::PumpWave, 2> waves_;
};

double mismatch_D(int pump_index, const ModeCoordinate& mode, const PumpPair& pumps,
                  const CrystalConfig& crystal);

// Mode given by external far-field angles and vacuum signal wavelength.
ModeCoordinate mode_from_external(double theta_x_ext, double theta_y_ext,
                                  double wavelength_nm, double pump_wavelength_nm);

struct SurfacePoint {
  double lambda_nm;
  double theta_x_ext_deg;
  double theta_y_ext_deg;
  int branch;  // pump index
  double d1;
  double d2;
};

struct SurfaceGrid {
  double theta_x_min_deg = -4.0;
  double theta_x_max_deg = 4.0;
  int n_theta_x = 161;
  double theta_y_min_deg = 0.0;
  double theta_y_max_deg = 0.0;
  int n_theta_y = 1;
  Band band{};
  int n_lambda = 301;
};

struct SurfaceTrace {
  std::vector<SurfacePoint> points;
  double min_abs_d = 0.0;  // diagnostic when points is empty
};

// Sign changes of D_j along the wavelength axis at every (theta_x, theta_y)
// grid node, refined to |D_j| < tol. Sorted by grid index.
SurfaceTrace trace_pm_surface(int pump_index, const SurfaceGrid& grid, double tol,
                              const PumpPair& pumps, const CrystalConfig& crystal);

// theta_y = 0 section: brackets along both axes of the (theta_x, lambda)
// grid, so that branches running parallel to either axis are captured.
SurfaceTrace trace_pm_section(int pump_index, const SurfaceGrid& grid, double tol,
                              const PumpPair& pumps, const CrystalConfig& crystal);

// External theta_x (rad) of every root of D_j along theta_x at fixed wavelength
// and theta_y = 0.
std::vector<double> section_crossings(int pump_index, double wavelength_nm,
                                      double theta_x_min, double theta_x_max, int samples,
                                      const PumpPair& pumps, const CrystalConfig& crystal);

// (k_p2 - k_p1) / (Q2 - Q1). Throws DomainError for coincident pumps.
double pump_rate(const PumpPair& pumps, const CrystalConfig& crystal);

struct SharedMode {
  double theta_x_int;                   // first-order locus
  double theta_x_ext;
  std::optional<double> theta_x_exact;  // internal, root of D1 = D2 at theta_y = 0
  std::optional<double> theta_y_ext;    // where the shared locus meets Sigma_1
};

SharedMode shared_mode_position(double omega, const PumpPair& pumps,
                                const CrystalConfig& crystal);

struct CoupledModes {
  double theta1_int;
  double theta2_int;
  double theta1_ext;
  double theta2_ext;
};

CoupledModes coupled_mode_positions(double omega, const PumpPair& pumps,
                                    const CrystalConfig& crystal);

// Exact shared-locus transverse wave number: root in q_x of D1 - D2 = 0 at
// q_y = 0. Throws NotFoundError if not bracketed.
double shared_locus_qx(double omega, const Mismatch& mm);

struct Hotspot {
  double lambda_nm;          // exact root of D1 = D2 = 0
  double theta_x_ext;
  double conjugate_nm;       // energy conjugate of lambda_nm
};

struct SharedHotspots {
  std::vector<Hotspot> roots;    // ascending wavelength
  double signal_nm = 0.0;        // shortest-wavelength root
  double idler_nm = 0.0;         // its energy conjugate
  double idler_exact_nm = 0.0;   // longest-wavelength root
};

// Shared-mode hot-spots on the theta_y = 0 section. Throws NotFoundError
// with min |D1| on the shared locus if no root lies in the band.
SharedHotspots shared_hotspots(const PumpPair& pumps, const CrystalConfig& crystal,
                               const Band& band = {}, int samples = 1201);

enum class FamilyTag { triplet, quadruplet };

struct ModeFamily {
  std::vector<double> lambda_nm;
  std::vector<double> theta0_ext;
  std::vector<double> theta1_ext;
  std::vector<double> theta2_ext;
  double max_gap01 = 0.0;  // internal, rad
  double max_gap02 = 0.0;
  FamilyTag tag = FamilyTag::triplet;
};

ModeFamily sample_mode_family(const PumpPair& pumps, const CrystalConfig& crystal,
                              const Band& band = {}, int samples = 301,
                              double coalescence_tol_rad = deg_to_rad(0.05));

enum class ResonanceBranch { collinear_noncollinear, collinear_nondegenerate };

std::string to_string(ResonanceBranch b);

struct ResonanceRoot {
  double beta_rad;
  ResonanceBranch branch;
  int multiplicity = 1;
  double pump_rate;
};

struct ResonanceScanPoint {
  double beta_rad;
  double minus;  // rate + (theta_p2 - theta_p1) / 2
  double plus;   // rate - (theta_p2 - theta_p1) / 2
};

struct ResonanceResult {
  std::vector<ResonanceRoot> roots;
  std::vector<ResonanceScanPoint> trace;
};

// Roots of pump_rate(beta) = -+(theta_p2 - theta_p1) / 2 over the rotation
// range. Pump internal tilts are re-resolved from the external angles at
// every beta.
ResonanceResult find_resonance(const optics::ExternalPumps& pumps,
                               const CrystalConfig& crystal, double beta_min_rad,
                               double beta_max_rad, double step_rad,
                               double beta_tol_rad = deg_to_rad(1e-4));

}  // namespace pdc::pm
