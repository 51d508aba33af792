#include "pdc/splitstep.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <map>
#include <mutex>
#include <random>
#include <thread>

#include <fmt/format.h>

#include "pdc/errors.hpp"
#include "pdc/rootfind.hpp"

namespace pdc::sim {

using fft::cplx;

namespace {

double band_omega_max(double pump_nm, const Band& band) {
  const double ws = optics::carrier_omega(pump_nm);
  return std::max(std::abs(omega_of_nm(band.min_nm) - ws), std::abs(omega_of_nm(band.max_nm) - ws));
}

double band_q_max(const Band& band, double max_angle_deg) {
  return k0_of_nm(band.min_nm) * std::sin(deg_to_rad(max_angle_deg));
}

// Raised-cosine taper over the outer `fraction` of n samples.
std::vector<double> edge_profile(int n, double fraction) {
  std::vector<double> m(n, 1.0);
  const double width = fraction * n;
  if (n < 2 || width < 1.0) return m;
  for (int i = 0; i < n; ++i) {
    const double d = std::min(i, n - 1 - i);
    if (d < width) m[i] = 0.5 * (1.0 - std::cos(kPi * d / width));
  }
  return m;
}

// Group delay per unit length dk/dw by central difference.
template <typename F>
double inverse_group_velocity(F&& k_of_omega, double w0) {
  const double h = 1e-4;
  return (k_of_omega(w0 + h) - k_of_omega(w0 - h)) / (2.0 * h);
}

inline void multiply(cplx* a, const cplx* p, std::size_t n) {
  auto* x = reinterpret_cast<double*>(a);
  const auto* y = reinterpret_cast<const double*>(p);
  for (std::size_t i = 0; i < n; ++i) {
    const double ar = x[2 * i], ai = x[2 * i + 1];
    const double pr = y[2 * i], pi = y[2 * i + 1];
    x[2 * i] = ar * pr - ai * pi;
    x[2 * i + 1] = ar * pi + ai * pr;
  }
}

// a <- c a + s conj(a), with real c and complex s.
inline void bogoliubov(cplx* a, const double* c, const cplx* s, std::size_t n) {
  auto* x = reinterpret_cast<double*>(a);
  const auto* y = reinterpret_cast<const double*>(s);
  for (std::size_t i = 0; i < n; ++i) {
    const double re = x[2 * i], im = x[2 * i + 1];
    const double sr = y[2 * i], si = y[2 * i + 1];
    x[2 * i] = c[i] * re + sr * re + si * im;
    x[2 * i + 1] = c[i] * im + si * re - sr * im;
  }
}

double sum_abs2(const cplx* a, std::size_t n) {
  double s = 0.0;
  for (std::size_t i = 0; i < n; ++i) s += std::norm(a[i]);
  return s;
}

}  // namespace

Grid default_grid(double pump_nm, const Band& band, double max_angle_deg, double guard, int nx,
                  int nt, int ny) {
  Grid g;
  g.nx = nx;
  g.ny = ny;
  g.nt = nt;
  g.dx = kPi / ((1.0 + guard) * band_q_max(band, max_angle_deg));
  g.dy = ny > 1 ? g.dx : 0.0;
  g.dt = kPi / ((1.0 + guard) * band_omega_max(pump_nm, band));
  return g;
}

void SimConfig::validate() const {
  crystal.validate();
  const auto& g = grid;
  if (g.nx < 1 || g.ny < 1 || g.nt < 1) throw ConfigError("/sim/grid", "grid sizes must be >= 1");
  if (!(g.dx > 0.0) || !(g.dt > 0.0) || (g.ny > 1 && !(g.dy > 0.0))) {
    throw ConfigError("/sim/grid", "grid spacings must be positive");
  }
  if (n_z < 1) throw ConfigError("/sim/n_z", "need at least one crystal step");
  if (!(glc >= 0.0) || !(coupling >= 0.0)) {
    throw ConfigError("/sim/glc", "gain and coupling must be non-negative");
  }
  if (!(edge_fraction >= 0.0 && edge_fraction < 0.5)) {
    throw ConfigError("/sim/edge_fraction", "must lie in [0, 0.5)");
  }
  if (!(noise_variance >= 0.0)) throw ConfigError("/sim/noise_variance", "must be >= 0");
  if (!(pump_photons_per_cell > 0.0)) {
    throw ConfigError("/sim/pump_photons_per_cell", "must be positive");
  }
  if (!(reference_energy_uj > 0.0)) {
    throw ConfigError("/sim/reference_energy_uj", "must be positive");
  }

  const double slack = 1.0 - 1e-9;
  const double q_need = (1.0 + guard) * band_q_max(band, max_angle_deg);
  const double w_need = (1.0 + guard) * band_omega_max(pumps.wavelength_nm, band);
  if (kPi / g.dx < q_need * slack) {
    throw ConfigError("/sim/grid/dx", fmt::format(
        "dx = {:.4f} um cannot hold +-{} deg over {}-{} nm with {:.0f}% guard; need dx <= {:.4f} um",
        g.dx, max_angle_deg, band.min_nm, band.max_nm, 100 * guard, kPi / q_need));
  }
  if (g.ny > 1 && kPi / g.dy < q_need * slack) {
    throw ConfigError("/sim/grid/dy", fmt::format("need dy <= {:.4f} um", kPi / q_need));
  }
  if (kPi / g.dt < w_need * slack) {
    throw ConfigError("/sim/grid/dt", fmt::format(
        "dt = {:.4f} fs cannot hold {}-{} nm with {:.0f}% guard; need dt <= {:.4f} fs", g.dt,
        band.min_nm, band.max_nm, 100 * guard, kPi / w_need));
  }

  const auto resolved = optics::resolve_pumps(pumps, crystal);
  const double k0p = k0_of_nm(pumps.wavelength_nm);
  for (int j = 0; j < 2; ++j) {
    const auto& b = pumps.beams[j];
    const auto ptr = fmt::format("/pumps/beams/{}", j);
    if (!(b.energy_uj >= 0.0)) throw ConfigError(ptr + "/energy_uj", "must be >= 0");
    if (b.energy_uj == 0.0) continue;
    if (b.waist_um > 0.0) {
      if (b.waist_um < 4.0 * g.dx) {
        throw ConfigError(ptr + "/waist_um", fmt::format(
            "waist {} um is unresolved; need dx <= {:.3f} um", b.waist_um, b.waist_um / 4.0));
      }
      if (g.nx * g.dx < 4.0 * b.waist_um) {
        throw ConfigError(ptr + "/waist_um", fmt::format(
            "transverse window {:.1f} um truncates the beam; need nx >= {}", g.nx * g.dx,
            static_cast<int>(std::ceil(4.0 * b.waist_um / g.dx))));
      }
    }
    if (b.duration_fs > 0.0) {
      if (b.duration_fs < 4.0 * g.dt) {
        throw ConfigError(ptr + "/duration_fs", fmt::format(
            "pulse {} fs is unresolved; need dt <= {:.3f} fs", b.duration_fs, b.duration_fs / 4.0));
      }
      if (g.nt * g.dt < 3.0 * b.duration_fs) {
        throw ConfigError(ptr + "/duration_fs", fmt::format(
            "time window {:.0f} fs truncates the pulse; need nt >= {}", g.nt * g.dt,
            static_cast<int>(std::ceil(3.0 * b.duration_fs / g.dt))));
      }
    }
    const double q = k0p * std::sin(resolved.tilt_rad[j]);
    if (std::abs(q) >= 0.9 * kPi / g.dx) {
      throw ConfigError(fmt::format("/pumps/tilt_deg/{}", j), fmt::format(
          "pump tilt outside the transverse Fourier domain; need dx <= {:.4f} um",
          0.9 * kPi / std::abs(q)));
    }
  }
  const double dq = std::abs(k0p * (std::sin(resolved.tilt_rad[1]) - std::sin(resolved.tilt_rad[0])));
  if (dq > 0.0 && 2.0 * kPi / dq < 2.0 * g.dx) {
    throw ConfigError("/sim/grid/dx", fmt::format(
        "pump fringes of period {:.3f} um are unresolved; need dx <= {:.3f} um", 2 * kPi / dq,
        kPi / dq));
  }
}

double FieldGrid::energy() const { return sum_abs2(data.data(), data.size()); }

struct Propagator::Impl {
  fft::Plan fwd;
  fft::Plan bwd;
  CVec signal_full;   // exp(i K_s h) / N
  CVec signal_half;   // exp(i K_s h / 2) / N
  CVec pump_hat0;     // spectrum of the entrance pump, so that bwd gives P
  CVec pump_full;     // exp(i K_p h)
  CVec pump_half;     // exp(i K_p h / 2)
  std::vector<double> mask;  // per (y, x) cell
  bool linear_only = false;

  Impl(const Grid& g, fft::Rigor rigor)
      : fwd(g.shape(), fft::Direction::forward, rigor),
        bwd(g.shape(), fft::Direction::backward, rigor) {}
};

Propagator::~Propagator() = default;

Propagator::Propagator(const SimConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  const Grid& g = cfg_.grid;
  const auto& crystal = cfg_.crystal;
  const double lp = cfg_.pumps.wavelength_nm;
  pumps_ = optics::resolve_pumps(cfg_.pumps, crystal);
  const double length = crystal.length_um;
  const double h = length / cfg_.n_z;
  sigma_ = cfg_.coupling > 0.0 ? cfg_.coupling : calibrate_coupling(cfg_.glc, length, cfg_.n_z);

  impl_ = std::make_unique<Impl>(g, cfg_.fft_rigor);
  auto& im = *impl_;
  const std::size_t n = g.size();
  const double inv_n = 1.0 / static_cast<double>(n);

  const double wp = omega_of_nm(lp);
  const auto p1 = optics::pump_wavevector(1, pumps_, crystal);
  const double k_ref = optics::signal_k(0.0, crystal, lp);
  const double is = inverse_group_velocity(
      [&](double w) { return optics::signal_k(w, crystal, lp); }, 0.0);
  const double ip = inverse_group_velocity(
      [&](double w) { return optics::extraordinary_kz(crystal, nm_of_omega(w), p1.q, 0.0); }, wp);
  const double inv_v = 0.5 * (is + ip);
  v_frame_ = 1.0 / inv_v;

  im.signal_full.resize(n);
  im.signal_half.resize(n);
  im.pump_full.resize(n);
  im.pump_half.resize(n);
  std::vector<double> ks(g.nt), lam_p(g.nt);
  for (int k = 0; k < g.nt; ++k) {
    const double w = g.omega(k);
    ks[k] = (optics::carrier_omega(lp) + w) > 0.0 ? optics::signal_k(w, crystal, lp) : 0.0;
    lam_p[k] = nm_of_omega(wp + w);
  }
  evanescent_ = 0;
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      const double qx = g.qx(i), qy = g.qy(j);
      const double q2 = qx * qx + qy * qy;
      const std::size_t row = (static_cast<std::size_t>(j) * g.nx + i) * g.nt;
      for (int k = 0; k < g.nt; ++k) {
        const double w = g.omega(k);
        const double kz2 = ks[k] * ks[k] - q2;
        if (ks[k] <= 0.0 || kz2 < 0.0) {
          im.signal_full[row + k] = 0.0;
          im.signal_half[row + k] = 0.0;
          ++evanescent_;
        } else {
          const double phase = std::sqrt(kz2) - k_ref - w * inv_v;
          im.signal_full[row + k] = std::polar(inv_n, phase * h);
          im.signal_half[row + k] = std::polar(inv_n, 0.5 * phase * h);
        }
        double kp;
        try {
          kp = optics::extraordinary_kz(crystal, lam_p[k], qx, qy);
        } catch (const EvanescentError&) {
          im.pump_full[row + k] = 0.0;
          im.pump_half[row + k] = 0.0;
          continue;
        }
        const double phase = kp - 2.0 * k_ref - w * inv_v;
        im.pump_full[row + k] = std::polar(1.0, phase * h);
        im.pump_half[row + k] = std::polar(1.0, 0.5 * phase * h);
      }
    }
  }
  if (evanescent_ > 0) {
    fmt::print(stderr, "split-step: {} evanescent signal modes are zeroed\n", evanescent_);
  }

  const auto mx = edge_profile(g.nx, cfg_.edge_fraction);
  const auto my = g.ny > 1 ? edge_profile(g.ny, cfg_.edge_fraction) : std::vector<double>{1.0};
  im.mask.resize(static_cast<std::size_t>(g.nx) * g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) im.mask[static_cast<std::size_t>(j) * g.nx + i] = my[j] * mx[i];
  }

  FieldGrid pump = init_pump();
  im.pump_hat0 = pump.data;
  im.fwd.execute(im.pump_hat0);
  for (auto& v : im.pump_hat0) v *= inv_n;
  im.linear_only = sigma_ == 0.0 || pump.energy() == 0.0;
}

FieldGrid Propagator::init_pump() const {
  const Grid& g = cfg_.grid;
  FieldGrid p(g, cfg_.pumps.wavelength_nm);
  const auto& crystal = cfg_.crystal;
  // Start the pump half a walk-off ahead so it crosses the frame centre mid-crystal.
  const double wp = omega_of_nm(cfg_.pumps.wavelength_nm);
  const auto p1 = optics::pump_wavevector(1, pumps_, crystal);
  const double ip = inverse_group_velocity(
      [&](double w) { return optics::extraordinary_kz(crystal, nm_of_omega(w), p1.q, 0.0); }, wp);
  const double t0 = -0.5 * crystal.length_um * (ip - 1.0 / v_frame_);
  for (int b = 0; b < 2; ++b) {
    const auto& beam = cfg_.pumps.beams[b];
    if (beam.energy_uj <= 0.0) continue;
    const double amp = std::sqrt(beam.energy_uj / cfg_.reference_energy_uj);
    const double q = optics::pump_wavevector(b + 1, pumps_, crystal).q;
    std::vector<double> ft(g.nt, 1.0);
    if (beam.duration_fs > 0.0) {
      for (int k = 0; k < g.nt; ++k) {
        const double t = g.t(k) - t0;
        ft[k] = std::exp(-2.0 * std::log(2.0) * t * t / (beam.duration_fs * beam.duration_fs));
      }
    }
    for (int j = 0; j < g.ny; ++j) {
      for (int i = 0; i < g.nx; ++i) {
        const double x = g.x(i), y = g.y(j);
        const double r2 = x * x + y * y;
        const double env = beam.waist_um > 0.0 ? std::exp(-r2 / (beam.waist_um * beam.waist_um)) : 1.0;
        const cplx c = std::polar(amp * env, q * x);
        const std::size_t row = (static_cast<std::size_t>(j) * g.nx + i) * g.nt;
        for (int k = 0; k < g.nt; ++k) p.data[row + k] += c * ft[k];
      }
    }
  }
  return p;
}

FieldGrid Propagator::seed_noise(std::uint64_t seed) const {
  FieldGrid f(cfg_.grid, 2.0 * cfg_.pumps.wavelength_nm);
  if (cfg_.noise_variance == 0.0) return f;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, std::sqrt(0.5 * cfg_.noise_variance));
  for (auto& v : f.data) {
    const double re = nd(rng);
    const double im = nd(rng);
    v = {re, im};
  }
  return f;
}

void Propagator::to_spectral(FieldGrid& f) const {
  impl_->fwd.execute(f.data);
  const double s = 1.0 / std::sqrt(static_cast<double>(f.data.size()));
  for (auto& v : f.data) v *= s;
}

void Propagator::to_direct(FieldGrid& f) const {
  impl_->bwd.execute(f.data);
  const double s = 1.0 / std::sqrt(static_cast<double>(f.data.size()));
  for (auto& v : f.data) v *= s;
}

void Propagator::propagate(std::vector<FieldGrid*> signals) const {
  const auto& im = *impl_;
  const Grid& g = cfg_.grid;
  const std::size_t n = g.size();
  for (auto* f : signals) {
    if (f->data.size() != n) throw NumericError("signal grid does not match the propagator");
  }
  const double h = cfg_.crystal.length_um / cfg_.n_z;
  auto linear = [&](FieldGrid& f, const CVec& phase) {
    im.fwd.execute(f.data);
    multiply(f.data.data(), phase.data(), n);
    im.bwd.execute(f.data);
  };
  std::vector<double> before;
  auto check = [&](int step) {
    for (std::size_t b = 0; b < signals.size(); ++b) {
      const double e = signals[b]->energy();
      if (e > before[b] * (1.0 + 1e-9) + 1e-300) {
        throw NumericError(fmt::format(
            "linear step {} increased the field energy from {:.17g} to {:.17g}", step, before[b], e));
      }
      before[b] = e;
    }
  };
  if (im.linear_only) {
    for (auto* f : signals) before.push_back(f->energy());
  }

  for (auto* f : signals) linear(*f, im.signal_half);
  if (im.linear_only) check(0);

  CVec pump_hat = im.pump_hat0;
  multiply(pump_hat.data(), im.pump_half.data(), n);
  CVec pump(n);
  std::vector<double> c(n);
  CVec s(n);
  const std::size_t cells = g.size() / g.nt;

  for (int step = 0; step < cfg_.n_z; ++step) {
    if (!im.linear_only) {
      std::copy(pump_hat.begin(), pump_hat.end(), pump.begin());
      im.bwd.execute(pump);
      for (std::size_t cell = 0; cell < cells; ++cell) {
        const double m = im.mask[cell];
        for (std::size_t k = cell * g.nt; k < (cell + 1) * g.nt; ++k) {
          const double a = std::sqrt(std::norm(pump[k]));
          const double x = sigma_ * a * h;
          const double e = std::exp(x);
          c[k] = 0.5 * m * (e + 1.0 / e);
          s[k] = a > 0.0 ? (0.5 * m * (e - 1.0 / e) / a) * pump[k] : cplx{0.0, 0.0};
        }
      }
      for (auto* f : signals) bogoliubov(f->data.data(), c.data(), s.data(), n);
      multiply(pump_hat.data(), im.pump_full.data(), n);
    } else if (cfg_.edge_fraction > 0.0) {
      for (auto* f : signals) {
        for (std::size_t cell = 0; cell < cells; ++cell) {
          for (std::size_t k = cell * g.nt; k < (cell + 1) * g.nt; ++k) f->data[k] *= im.mask[cell];
        }
      }
    }
    const CVec& phase = step + 1 == cfg_.n_z ? im.signal_half : im.signal_full;
    for (auto* f : signals) linear(*f, phase);
    if (im.linear_only) check(step + 1);
  }
}

PropagationStats Propagator::propagate_depleted(FieldGrid& signal, FieldGrid& pump) const {
  const auto& im = *impl_;
  const Grid& g = cfg_.grid;
  const std::size_t n = g.size();
  if (signal.data.size() != n || pump.data.size() != n) {
    throw NumericError("field grids do not match the propagator");
  }
  const double h = cfg_.crystal.length_um / cfg_.n_z;
  const double cph = cfg_.pump_photons_per_cell;
  const double inv_n = 1.0 / static_cast<double>(n);
  PropagationStats st;
  st.evanescent_modes = evanescent_;
  st.signal_energy_in = signal.energy();
  st.pump_photons_in = cph * pump.energy();

  CVec pump_full(im.pump_full), pump_half(im.pump_half);
  for (auto& v : pump_full) v *= inv_n;
  for (auto& v : pump_half) v *= inv_n;
  auto linear = [&](CVec& f, const CVec& phase) {
    im.fwd.execute(f);
    multiply(f.data(), phase.data(), n);
    im.bwd.execute(f);
  };
  linear(signal.data, im.signal_half);
  linear(pump.data, pump_half);

  const double sp = sigma_;
  const double sa = sigma_ / (2.0 * cph);
  const std::size_t cells = n / g.nt;
  for (int step = 0; step < cfg_.n_z; ++step) {
    for (std::size_t cell = 0; cell < cells; ++cell) {
      const double m = im.mask[cell];
      for (std::size_t k = cell * g.nt; k < (cell + 1) * g.nt; ++k) {
        cplx a = signal.data[k], p = pump.data[k];
        auto fa = [&](cplx A, cplx P) { return sp * P * std::conj(A); };
        auto fp = [&](cplx A) { return -sa * A * A; };
        const cplx ka1 = fa(a, p), kp1 = fp(a);
        const cplx ka2 = fa(a + 0.5 * h * ka1, p + 0.5 * h * kp1), kp2 = fp(a + 0.5 * h * ka1);
        const cplx ka3 = fa(a + 0.5 * h * ka2, p + 0.5 * h * kp2), kp3 = fp(a + 0.5 * h * ka2);
        const cplx ka4 = fa(a + h * ka3, p + h * kp3), kp4 = fp(a + h * ka3);
        a += h / 6.0 * (ka1 + 2.0 * ka2 + 2.0 * ka3 + ka4);
        p += h / 6.0 * (kp1 + 2.0 * kp2 + 2.0 * kp3 + kp4);
        signal.data[k] = m * a;
        pump.data[k] = p;
      }
    }
    const bool last = step + 1 == cfg_.n_z;
    linear(signal.data, last ? im.signal_half : im.signal_full);
    linear(pump.data, last ? pump_half : pump_full);
  }
  st.signal_energy_out = signal.energy();
  st.pump_photons_out = cph * pump.energy();
  return st;
}

void nonlinear_step(cplx* a, const cplx* pump, std::size_t n, double sigma, double h) {
  for (std::size_t k = 0; k < n; ++k) {
    const double m = std::abs(pump[k]);
    const double x = sigma * m * h;
    const cplx s = m > 0.0 ? std::sinh(x) / m * pump[k] : cplx{0.0, 0.0};
    a[k] = std::cosh(x) * a[k] + s * std::conj(a[k]);
  }
}

double calibrate_coupling(double glc, double length_um, int n_z, double tol) {
  if (!(glc > 0.0)) return 0.0;
  const double h = length_um / n_z;
  const cplx pump{1.0, 0.0};
  auto gain = [&](double sigma) {
    cplx a{1.0, 0.0};
    for (int i = 0; i < n_z; ++i) nonlinear_step(&a, &pump, 1, sigma, h);
    return std::log(std::abs(a)) - glc;
  };
  const auto root = bisect(gain, 0.0, 2.0 * glc / length_um, tol / length_um, tol);
  if (!root) throw NumericError("coupling calibration failed to bracket the target gain");
  return *root;
}

namespace {

std::vector<int> band_bins(const Grid& g, const Band& band, double pump_nm) {
  const double ws = optics::carrier_omega(pump_nm);
  std::vector<int> bins;
  for (int k = 0; k < g.nt; ++k) {
    const double w = ws + g.omega(k);
    if (w <= 0.0) continue;
    const double l = nm_of_omega(w);
    if (l >= band.min_nm && l <= band.max_nm) bins.push_back(k);
  }
  if (bins.empty()) {
    throw DomainError(fmt::format("no frequency bin falls in {}-{} nm", band.min_nm, band.max_nm));
  }
  return bins;
}

}  // namespace

std::vector<double> far_field(const FieldGrid& f, const Band& band, double pump_nm) {
  const Grid& g = f.grid;
  const auto bins = band_bins(g, band, pump_nm);
  std::vector<double> out(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    double s = 0.0;
    for (int k : bins) s += std::norm(f.data[cell * g.nt + k]);
    out[cell] = s;
  }
  return out;
}

std::vector<double> far_field(const std::vector<double>& intensity, const Grid& g, const Band& band,
                              double pump_nm) {
  if (intensity.size() != g.size()) throw NumericError("intensity does not match the grid");
  const auto bins = band_bins(g, band, pump_nm);
  std::vector<double> out(static_cast<std::size_t>(g.nx) * g.ny, 0.0);
  for (std::size_t cell = 0; cell < out.size(); ++cell) {
    double s = 0.0;
    for (int k : bins) s += intensity[cell * g.nt + k];
    out[cell] = s;
  }
  return out;
}

SpectralMap angular_spectrum(const std::vector<double>& intensity, const Grid& g, double pump_nm,
                             double slit_deg) {
  if (intensity.size() != g.size()) throw NumericError("intensity does not match the grid");
  const double ws = optics::carrier_omega(pump_nm);
  std::vector<int> rows;
  for (int k = 0; k < g.nt; ++k) {
    if (ws + g.omega(k) > 0.0) rows.push_back(k);
  }
  // Ascending wavelength means descending omega.
  std::sort(rows.begin(), rows.end(), [&](int a, int b) { return g.omega(a) > g.omega(b); });
  std::vector<int> cols(g.nx);
  for (int i = 0; i < g.nx; ++i) cols[i] = i;
  std::sort(cols.begin(), cols.end(), [&](int a, int b) { return g.qx(a) < g.qx(b); });

  SpectralMap m;
  m.pump_wavelength_nm = pump_nm;
  for (int k : rows) m.lambda_nm.push_back(nm_of_omega(ws + g.omega(k)));
  for (int i : cols) m.qx.push_back(g.qx(i));
  m.data.assign(m.rows() * m.cols(), 0.0);
  const double slit = deg_to_rad(slit_deg);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const int k = rows[r];
    const double k0 = k0_of_nm(m.lambda_nm[r]);
    for (int j = 0; j < g.ny; ++j) {
      const double sy = g.qy(j) / k0;
      if (std::abs(sy) > 1.0 || std::abs(std::asin(sy)) > slit + 1e-15) continue;
      for (std::size_t c = 0; c < cols.size(); ++c) {
        const std::size_t idx = (static_cast<std::size_t>(j) * g.nx + cols[c]) * g.nt + k;
        m.at(r, c) += intensity[idx];
      }
    }
  }
  return m;
}

SpectralMap angular_spectrum(const FieldGrid& f, double pump_nm, double slit_deg) {
  std::vector<double> intensity(f.data.size());
  for (std::size_t i = 0; i < intensity.size(); ++i) intensity[i] = std::norm(f.data[i]);
  return angular_spectrum(intensity, f.grid, pump_nm, slit_deg);
}

std::uint64_t shot_seed(std::uint64_t master, int shot) {
  std::uint64_t z = master + 0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(shot) + 1);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

EnsembleResult run_ensemble(const Propagator& prop, const EnsembleOptions& opts) {
  if (opts.shots < 1) throw ConfigError("/run/shots", "need at least one shot");
  const auto t_start = std::chrono::steady_clock::now();
  const Grid& g = prop.config().grid;
  const std::size_t n = g.size();
  const int batch = std::max(1, opts.batch);
  const int n_batches = (opts.shots + batch - 1) / batch;
  const int workers = std::max(1, std::min(opts.threads, n_batches));

  std::vector<double> total(n, 0.0);
  std::map<int, std::vector<double>> pending;
  int next_merge = 0;
  int done_shots = 0;
  std::mutex mu;
  std::atomic<int> next_batch{0};
  std::exception_ptr failure;

  auto worker = [&]() {
    try {
      for (;;) {
        const int b = next_batch.fetch_add(1);
        if (b >= n_batches) return;
        const int first = b * batch;
        const int last = std::min(opts.shots, first + batch);
        std::vector<FieldGrid> fields;
        for (int s = first; s < last; ++s) {
          fields.push_back(prop.seed_noise(shot_seed(prop.config().seed, s)));
        }
        std::vector<FieldGrid*> ptrs;
        for (auto& f : fields) ptrs.push_back(&f);
        prop.propagate(ptrs);
        std::vector<double> part(n, 0.0);
        for (auto& f : fields) {
          prop.to_spectral(f);
          for (std::size_t i = 0; i < n; ++i) part[i] += std::norm(f.data[i]);
        }
        std::lock_guard<std::mutex> lock(mu);
        pending.emplace(b, std::move(part));
        while (!pending.empty() && pending.begin()->first == next_merge) {
          const auto& p = pending.begin()->second;
          for (std::size_t i = 0; i < n; ++i) total[i] += p[i];
          pending.erase(pending.begin());
          ++next_merge;
        }
        done_shots += last - first;
        if (opts.progress) opts.progress(done_shots, opts.shots);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(mu);
      if (!failure) failure = std::current_exception();
      next_batch.store(n_batches);
    }
  };

  if (workers == 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  EnsembleResult r;
  r.grid = g;
  r.shots = opts.shots;
  r.evanescent_modes = prop.evanescent_modes();
  r.mean_intensity.resize(n);
  const double vac = opts.subtract_vacuum ? prop.config().noise_variance : 0.0;
  for (std::size_t i = 0; i < n; ++i) r.mean_intensity[i] = total[i] / opts.shots - vac;
  r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return r;
}

}  // namespace pdc::sim
