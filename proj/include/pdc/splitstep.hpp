#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <vector>

#include "pdc/fft.hpp"
#include "pdc/optics.hpp"
#include "pdc/spectral_map.hpp"

namespace pdc::sim {

using fft::CVec;
using fft::RVec;

// Sampling lattice. Layout is row-major [y][x][t] with t fastest; ny = 1
// for 2+1D runs.
struct Grid {
  int nx = 512;
  int ny = 1;
  int nt = 1024;
  double dx = 0.0;  // um
  double dy = 0.0;  // um
  double dt = 0.0;  // fs

  std::size_t size() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nt);
  }
  std::vector<int> shape() const {
    return ny > 1 ? std::vector<int>{ny, nx, nt} : std::vector<int>{nx, nt};
  }
  double x(int i) const { return (i - nx / 2) * dx; }
  double y(int j) const { return ny > 1 ? (j - ny / 2) * dy : 0.0; }
  double t(int k) const { return (k - nt / 2) * dt; }
  // Fourier coordinates of DFT bins, with A = sum a exp(i q x - i W t).
  double qx(int i) const { return 2.0 * kPi * fft::signed_index(i, nx) / (nx * dx); }
  double qy(int j) const {
    return ny > 1 ? 2.0 * kPi * fft::signed_index(j, ny) / (ny * dy) : 0.0;
  }
  double omega(int k) const { return -2.0 * kPi * fft::signed_index(k, nt) / (nt * dt); }
};

struct Band {
  double min_nm = 600.0;
  double max_nm = 850.0;
};

// Coarsest spacings that hold the band and +-max_angle inside the Fourier
// domain with the given fractional guard.
Grid default_grid(double pump_wavelength_nm, const Band& band = {}, double max_angle_deg = 4.0,
                  double guard = 0.2, int nx = 512, int nt = 1024, int ny = 1);

struct SimConfig {
  Grid grid = {};
  int n_z = 100;
  optics::CrystalConfig crystal{};
  optics::ExternalPumps pumps{};
  double reference_energy_uj = 35.0;  // per-beam energy at which gl_c is met
  double glc = 6.0;                   // single-pump plane-wave gain at reference
  double coupling = 0.0;              // 1/um per unit pump amplitude; 0 = calibrate
  std::uint64_t seed = 1;
  bool depletion = false;
  double pump_photons_per_cell = 1e10;  // photon scale of |P|^2 = 1 in one cell
  double noise_variance = 0.5;          // <|a|^2> of vacuum seeding, photon units
  double edge_fraction = 0.05;          // absorbing raised-cosine band, 0 disables
  Band band{};                          // band that must fit the grid
  double max_angle_deg = 4.0;
  double guard = 0.2;
  fft::Rigor fft_rigor = fft::Rigor::estimate;

  // Throws ConfigError naming the offending field and required resolution.
  void validate() const;
};

struct FieldGrid {
  Grid grid{};
  CVec data;
  double center_wavelength_nm = 704.0;

  FieldGrid() = default;
  FieldGrid(const Grid& g, double center_nm) : grid(g), data(g.size()), center_wavelength_nm(center_nm) {}
  double energy() const;  // sum |A|^2 over cells
};

struct PropagationStats {
  std::size_t evanescent_modes = 0;
  double pump_photons_in = 0.0;
  double pump_photons_out = 0.0;
  double signal_energy_in = 0.0;
  double signal_energy_out = 0.0;
};

// Holds the precomputed phases, pump spectrum and transforms for one
// configuration. Thread-safe for concurrent const use.
class Propagator {
 public:
  explicit Propagator(const SimConfig& cfg);
  ~Propagator();
  Propagator(const Propagator&) = delete;
  Propagator& operator=(const Propagator&) = delete;

  const SimConfig& config() const { return cfg_; }
  const optics::PumpPair& pumps() const { return pumps_; }
  double coupling() const { return sigma_; }
  double frame_velocity() const { return v_frame_; }
  std::size_t evanescent_modes() const { return evanescent_; }

  // Sum of the two Gaussian beams at the crystal entrance, peak amplitude
  // sqrt(E_j / E_ref) per beam.
  FieldGrid init_pump() const;
  // Complex Gaussian samples with <|A|^2> = noise_variance per cell.
  FieldGrid seed_noise(std::uint64_t seed) const;

  // Undepleted pump: the pump evolves analytically and the same pump slice
  // is shared by every field of the batch.
  void propagate(std::vector<FieldGrid*> signals) const;
  void propagate(FieldGrid& signal) const { propagate(std::vector<FieldGrid*>{&signal}); }

  // Depleted pump: signal and pump are stepped together, nonlinear step by RK4.
  PropagationStats propagate_depleted(FieldGrid& signal, FieldGrid& pump) const;

  // Unitary transform to the (q, omega) domain.
  void to_spectral(FieldGrid& f) const;
  void to_direct(FieldGrid& f) const;

 private:
  struct Impl;
  SimConfig cfg_;
  optics::PumpPair pumps_;
  double sigma_ = 0.0;
  double v_frame_ = 0.0;
  std::size_t evanescent_ = 0;
  std::unique_ptr<Impl> impl_;
};

// Nonlinear step A <- cosh(|k| h) A + sinh(|k| h) k / |k| A*, k = sigma P.
// Exact for a frozen pump.
void nonlinear_step(fft::cplx* a, const fft::cplx* pump, std::size_t n, double sigma, double h);

// Coupling that makes a phase-matched plane wave of unit pump amplitude
// reach ln|A(L)| = glc after the split-step march, by bisection.
double calibrate_coupling(double glc, double length_um, int n_z, double tol = 1e-10);

// Time-integrated |a|^2 over the (q_x, q_y) plane of a spectral-domain field,
// restricted to signal wavelengths in the band. Row-major [qy][qx] in DFT order.
std::vector<double> far_field(const FieldGrid& spectral, const Band& band,
                              double pump_wavelength_nm);
std::vector<double> far_field(const std::vector<double>& intensity, const Grid& grid, const Band& band,
                              double pump_wavelength_nm);

// Slit-selected (lambda, q_x) map of a spectral-domain intensity array laid
// out like the grid. Cells with |theta_y| <= slit_deg contribute.
SpectralMap angular_spectrum(const std::vector<double>& intensity, const Grid& grid,
                             double pump_wavelength_nm, double slit_deg = 0.05);
SpectralMap angular_spectrum(const FieldGrid& spectral, double pump_wavelength_nm,
                             double slit_deg = 0.05);

struct EnsembleOptions {
  int shots = 50;
  int threads = 1;
  int batch = 4;
  bool subtract_vacuum = true;
  std::function<void(int done, int total)> progress;
};

// Mean spectral intensity over shots, <|a|^2> minus the vacuum term.
// Per-shot seeds come from (master seed, shot index); batches are summed in
// index order so the result does not depend on the thread count.
struct EnsembleResult {
  Grid grid;
  std::vector<double> mean_intensity;  // spectral layout of the grid
  int shots = 0;
  double seconds = 0.0;
  std::size_t evanescent_modes = 0;
};

EnsembleResult run_ensemble(const Propagator& prop, const EnsembleOptions& opts);

std::uint64_t shot_seed(std::uint64_t master, int shot);

}  // namespace pdc::sim
