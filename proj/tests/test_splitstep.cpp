#include <algorithm>
#include <cmath>
#include <cstring>

#include <doctest.h>

#include "pdc/errors.hpp"
#include "pdc/splitstep.hpp"

using namespace pdc;
using namespace pdc::sim;

namespace {

// Reduced 2+1D grid with continuous-wave pumps.
SimConfig small_config(int nx = 512, int nt = 64) {
  SimConfig c;
  c.crystal.cut_rad = optics::phase_matched_cut(c.crystal.dispersion, 352.0);
  c.pumps.wavelength_nm = 352.0;
  c.pumps.tilt_ext_rad = {0.0, deg_to_rad(2.0)};
  for (auto& b : c.pumps.beams) {
    b.waist_um = 297.0;
    b.duration_fs = 0.0;
    b.energy_uj = 35.0;
  }
  c.grid = default_grid(352.0, c.band, c.max_angle_deg, c.guard, nx, nt);
  c.n_z = 40;
  return c;
}

std::vector<double> intensity_at_t0(const FieldGrid& f) {
  const auto& g = f.grid;
  std::vector<double> out(g.nx);
  for (int i = 0; i < g.nx; ++i) out[i] = std::norm(f.data[static_cast<std::size_t>(i) * g.nt]);
  return out;
}

double max_rel_diff(const FieldGrid& a, const FieldGrid& b) {
  double d = 0.0, s = 0.0;
  for (std::size_t i = 0; i < a.data.size(); ++i) {
    d = std::max(d, std::abs(a.data[i] - b.data[i]));
    s = std::max(s, std::abs(a.data[i]));
  }
  return d / s;
}

}  // namespace

TEST_CASE("default grid holds the band with the guard margin") {
  const auto c = small_config();
  CHECK_NOTHROW(c.validate());
  auto bad = c;
  bad.grid.dx *= 1.5;
  try {
    bad.validate();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.pointer() == "/sim/grid/dx");
  }
  bad = c;
  bad.grid.dt *= 1.5;
  try {
    bad.validate();
    FAIL("expected a ConfigError");
  } catch (const ConfigError& e) {
    CHECK(e.pointer() == "/sim/grid/dt");
  }
  bad = c;
  bad.pumps.beams[0].waist_um = 5.0;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("spectral round trip is the identity") {
  const auto c = small_config(512, 64);
  const Propagator p(c);
  auto f = p.seed_noise(3);
  const auto orig = f;
  const double e0 = f.energy();
  p.to_spectral(f);
  CHECK(f.energy() == doctest::Approx(e0).epsilon(1e-12));
  p.to_direct(f);
  CHECK(max_rel_diff(orig, f) < 1e-12);
}

TEST_CASE("pump fringe period") {
  auto c = small_config(4096, 8);
  c.grid.dx = 0.5;
  const Propagator p(c);
  const auto pump = p.init_pump();
  const auto I = intensity_at_t0(pump);
  const auto& g = c.grid;
  // Count local maxima over the central 400 um.
  std::vector<double> peaks;
  for (int i = 1; i + 1 < g.nx; ++i) {
    const double x = g.x(i);
    if (std::abs(x) > 200.0) continue;
    if (I[i] > I[i - 1] && I[i] >= I[i + 1]) {
      // Parabolic refinement.
      const double den = I[i - 1] - 2.0 * I[i] + I[i + 1];
      peaks.push_back(x + (den != 0.0 ? 0.5 * (I[i - 1] - I[i + 1]) / den : 0.0) * g.dx);
    }
  }
  REQUIRE(peaks.size() > 10);
  const double period = (peaks.back() - peaks.front()) / (peaks.size() - 1);
  const auto q1 = optics::pump_wavevector(1, p.pumps(), c.crystal).q;
  const auto q2 = optics::pump_wavevector(2, p.pumps(), c.crystal).q;
  CHECK(period == doctest::Approx(2.0 * kPi / std::abs(q2 - q1)).epsilon(1e-3));
  CHECK(period == doctest::Approx(0.352 / std::sin(deg_to_rad(2.0))).epsilon(1e-3));
}

TEST_CASE("coincident pumps give one Gaussian without fringes") {
  auto c = small_config(1024, 8);
  c.pumps.tilt_ext_rad = {0.0, 0.0};
  const Propagator both(c);
  auto c1 = c;
  c1.pumps.beams[1].energy_uj = 0.0;
  const Propagator one(c1);
  const auto a = intensity_at_t0(both.init_pump());
  const auto b = intensity_at_t0(one.init_pump());
  for (int i = 0; i < c.grid.nx; ++i) {
    if (b[i] > 1e-6) CHECK(a[i] / b[i] == doctest::Approx(4.0).epsilon(1e-12));
  }
}

TEST_CASE("beam intensity FWHM is 350 um for a 297 um waist") {
  auto c = small_config(4096, 8);
  c.grid.dx = 0.5;
  c.pumps.beams[1].energy_uj = 0.0;
  const Propagator p(c);
  const auto I = intensity_at_t0(p.init_pump());
  const auto& g = c.grid;
  const double peak = *std::max_element(I.begin(), I.end());
  double left = 0.0, right = 0.0;
  for (int i = 1; i < g.nx; ++i) {
    const double a = I[i - 1] - 0.5 * peak, b = I[i] - 0.5 * peak;
    if (a < 0.0 && b >= 0.0) left = g.x(i - 1) + g.dx * (-a) / (b - a);
    if (a >= 0.0 && b < 0.0) right = g.x(i - 1) + g.dx * a / (a - b);
  }
  CHECK(right - left == doctest::Approx(350.0).epsilon(0.01));
}

TEST_CASE("noise seeding") {
  const auto c = small_config(512, 64);
  const Propagator p(c);
  const auto a = p.seed_noise(11);
  const auto b = p.seed_noise(11);
  CHECK(std::memcmp(a.data.data(), b.data.data(), a.data.size() * sizeof(a.data[0])) == 0);
  const auto d = p.seed_noise(12);
  CHECK(std::memcmp(a.data.data(), d.data.data(), a.data.size() * sizeof(a.data[0])) != 0);
  const double n = static_cast<double>(a.data.size());
  REQUIRE(n >= 1e4);
  const double mean = a.energy() / n;
  CHECK(std::abs(mean - 0.5) <= 3.0 * 0.5 / std::sqrt(n));
}

TEST_CASE("no seed, no emission") {
  auto c = small_config(512, 64);
  c.noise_variance = 0.0;
  const Propagator p(c);
  auto f = p.seed_noise(1);
  p.propagate(f);
  CHECK(f.energy() == 0.0);
}

TEST_CASE("linear propagation is unitary") {
  auto c = small_config(512, 64);
  c.edge_fraction = 0.0;
  for (auto& b : c.pumps.beams) b.energy_uj = 0.0;
  const Propagator p(c);
  auto f = p.seed_noise(5);
  const double e0 = f.energy();
  p.propagate(f);
  CHECK(std::abs(f.energy() - e0) <= 1e-10 * e0);
}

TEST_CASE("linear propagation is a semigroup") {
  auto c = small_config(512, 64);
  c.edge_fraction = 0.0;
  for (auto& b : c.pumps.beams) b.energy_uj = 0.0;
  c.n_z = 20;
  const Propagator half(c);
  auto c2 = c;
  c2.crystal.length_um *= 2.0;
  c2.n_z = 40;
  const Propagator whole(c2);
  auto a = half.seed_noise(9);
  auto b = a;
  half.propagate(a);
  half.propagate(a);
  whole.propagate(b);
  CHECK(max_rel_diff(b, a) < 1e-10);
}

TEST_CASE("nonlinear step and coupling calibration") {
  const fft::cplx pump = std::polar(0.8, 0.3);
  fft::cplx a{0.2, -0.1};
  const fft::cplx a0 = a;
  nonlinear_step(&a, &pump, 1, 0.5, 0.1);
  const double x = 0.5 * 0.8 * 0.1;
  const fft::cplx expect = std::cosh(x) * a0 + std::sinh(x) * std::polar(1.0, 0.3) * std::conj(a0);
  CHECK(std::abs(a - expect) < 1e-15);
  const double sigma = calibrate_coupling(6.0, 4000.0, 100);
  fft::cplx s{1.0, 0.0};
  const fft::cplx one{1.0, 0.0};
  for (int i = 0; i < 100; ++i) nonlinear_step(&s, &one, 1, sigma, 40.0);
  CHECK(std::log(std::abs(s)) == doctest::Approx(6.0).epsilon(1e-9));
  CHECK(calibrate_coupling(0.0, 4000.0, 100) == 0.0);
}

TEST_CASE("Manley-Rowe with pump depletion") {
  auto c = small_config(512, 64);
  c.edge_fraction = 0.0;
  c.n_z = 200;
  c.pump_photons_per_cell = 1e3;  // strong seeding relative to the pump so depletion is visible
  const Propagator p(c);
  auto signal = p.seed_noise(21);
  for (auto& v : signal.data) v *= 30.0;
  auto pump = p.init_pump();
  const auto st = p.propagate_depleted(signal, pump);
  const double gained = st.signal_energy_out - st.signal_energy_in;
  const double lost = st.pump_photons_in - st.pump_photons_out;
  REQUIRE(gained > 0.0);
  REQUIRE(lost > 1e-3 * st.pump_photons_in);
  CHECK(std::abs(gained - 2.0 * lost) <= 1e-3 * gained);
}

TEST_CASE("ensemble is bit-exact for a fixed seed") {
  auto c = small_config(512, 64);
  c.n_z = 20;
  const Propagator p(c);
  EnsembleOptions o;
  o.shots = 6;
  o.batch = 2;
  o.threads = 1;
  const auto a = run_ensemble(p, o);
  const auto b = run_ensemble(p, o);
  o.threads = 3;
  const auto t = run_ensemble(p, o);
  REQUIRE(a.mean_intensity.size() == b.mean_intensity.size());
  CHECK(std::memcmp(a.mean_intensity.data(), b.mean_intensity.data(), a.mean_intensity.size() * sizeof(double)) == 0);
  CHECK(std::memcmp(a.mean_intensity.data(), t.mean_intensity.data(), a.mean_intensity.size() * sizeof(double)) == 0);
  o.shots = 0;
  CHECK_THROWS_AS(run_ensemble(p, o), ConfigError);
}

TEST_CASE("shot seeds are distinct") {
  std::vector<std::uint64_t> s;
  for (int i = 0; i < 1000; ++i) s.push_back(shot_seed(1, i));
  std::sort(s.begin(), s.end());
  CHECK(std::adjacent_find(s.begin(), s.end()) == s.end());
}

TEST_CASE("Parseval: far field, filtered direct field and lambda marginal agree") {
  auto c = small_config(512, 64);
  c.n_z = 20;
  const Propagator p(c);
  auto f = p.seed_noise(4);
  p.propagate(f);
  auto spec = f;
  p.to_spectral(spec);
  const Band band{650.0, 760.0};
  const auto far = far_field(spec, band, c.pumps.wavelength_nm);
  double far_sum = 0.0;
  for (double v : far) far_sum += v;
  REQUIRE(far_sum > 0.0);

  // Filter the band in the spectral domain and measure the direct-domain energy.
  auto filt = spec;
  const auto& g = c.grid;
  const double ws = optics::carrier_omega(c.pumps.wavelength_nm);
  for (int k = 0; k < g.nt; ++k) {
    const double w = ws + g.omega(k);
    const double l = w > 0.0 ? nm_of_omega(w) : 0.0;
    if (l >= band.min_nm && l <= band.max_nm) continue;
    for (std::size_t cell = 0; cell < static_cast<std::size_t>(g.nx) * g.ny; ++cell) filt.data[cell * g.nt + k] = 0.0;
  }
  p.to_direct(filt);
  CHECK(std::abs(filt.energy() - far_sum) <= 1e-10 * far_sum);

  const auto map = angular_spectrum(spec, c.pumps.wavelength_nm, 90.0);
  double marg = 0.0;
  for (std::size_t r = 0; r < map.rows(); ++r) {
    if (map.lambda_nm[r] < band.min_nm || map.lambda_nm[r] > band.max_nm) continue;
    for (std::size_t col = 0; col < map.cols(); ++col) marg += map.at(r, col);
  }
  CHECK(std::abs(marg - far_sum) <= 1e-10 * far_sum);
  CHECK_THROWS_AS(far_field(spec, {703.9, 703.95}, 352.0), DomainError);
}

TEST_CASE("halving the step changes the band photon number by less than 1%") {
  auto c = small_config(512, 64);
  c.n_z = 100;
  const Propagator coarse(c);
  c.n_z = 200;
  const Propagator fine(c);
  EnsembleOptions o;
  o.shots = 2;
  o.batch = 2;
  const auto a = run_ensemble(coarse, o);
  const auto b = run_ensemble(fine, o);
  const Band band{600.0, 850.0};
  double sa = 0.0, sb = 0.0;
  for (double v : far_field(a.mean_intensity, a.grid, band, 352.0)) sa += v;
  for (double v : far_field(b.mean_intensity, b.grid, band, 352.0)) sb += v;
  REQUIRE(sb > 0.0);
  CHECK(std::abs(sa - sb) / sb < 0.01);
}
