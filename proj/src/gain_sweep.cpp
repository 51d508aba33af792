#include "pdc/gain_sweep.hpp"

#include <fmt/format.h>

#include "pdc/errors.hpp"
#include "pdc/phasematch.hpp"

namespace pdc::analysis {

HotspotTarget hotspot_target(const optics::PumpPair& pumps, const optics::CrystalConfig& crystal) {
  HotspotTarget t;
  try {
    const auto hs = pm::shared_hotspots(pumps, crystal);
    t.lambda_nm = hs.roots.front().lambda_nm;
    t.theta_x_ext_deg = rad_to_deg(hs.roots.front().theta_x_ext);
  } catch (const NotFoundError&) {
    const auto sm = pm::shared_mode_position(0.0, pumps, crystal);
    t.lambda_nm = 2.0 * pumps.wavelength_nm;
    const double n = optics::ordinary_index(crystal.dispersion, t.lambda_nm);
    t.theta_x_ext_deg = rad_to_deg(sm.theta_x_exact ? optics::internal_to_external(*sm.theta_x_exact, n)
                                                    : sm.theta_x_ext);
    t.coalesced = true;
  }
  return t;
}

Window window_at(const std::string& name, const HotspotTarget& t, double lambda_width_nm,
                 double theta_width_deg) {
  return {name, t.lambda_nm, lambda_width_nm, t.theta_x_ext_deg, theta_width_deg};
}

std::vector<SweepPoint> run_sweep(const sim::SimConfig& base, bool single_pump,
                                  const std::vector<Window>& windows, const SweepSettings& settings,
                                  const std::function<void(const SweepPoint&, const SpectralMap&)>& on_map) {
  if (!(base.glc > 0.0)) throw ConfigError("/sim/glc", "the sweep needs a positive reference gain");
  std::vector<SweepPoint> out;
  for (const double g : settings.glc) {
    if (!(g > 0.0)) throw ConfigError("/analysis/glc_sweep", fmt::format("gain {} must be positive", g));
    auto cfg = base;
    const double e = base.reference_energy_uj * (g / base.glc) * (g / base.glc);
    cfg.pumps.beams[0].energy_uj = e;
    cfg.pumps.beams[1].energy_uj = single_pump ? 0.0 : e;
    sim::Propagator prop(cfg);
    sim::EnsembleOptions opts;
    opts.shots = settings.shots;
    opts.threads = settings.threads;
    opts.batch = settings.batch;
    const auto r = sim::run_ensemble(prop, opts);
    const auto map = sim::angular_spectrum(r.mean_intensity, r.grid, cfg.pumps.wavelength_nm, settings.slit_deg);
    SweepPoint p;
    p.glc = g;
    p.energy_uj = e;
    p.windows = extract_hotspots(map, windows).bands;
    p.seconds = r.seconds;
    if (settings.log) {
      std::string s = fmt::format("gl {:.2f} E {:.2f} uJ{} [{:.1f} s]", g, e, single_pump ? " (pump 1 only)" : "", r.seconds);
      for (const auto& w : p.windows) s += fmt::format("  {} {:.6g}", w.name, w.counts);
      settings.log(s);
    }
    if (on_map) on_map(p, map);
    out.push_back(std::move(p));
  }
  return out;
}

EnergySeries series_of(const std::vector<SweepPoint>& points, const std::string& window) {
  EnergySeries s;
  s.band = window;
  for (const auto& p : points) {
    bool found = false;
    for (const auto& w : p.windows) {
      if (w.name != window) continue;
      s.energy_uj.push_back(p.energy_uj);
      s.counts.push_back(w.counts);
      found = true;
    }
    if (!found) throw DomainError(fmt::format("sweep point at gl {} has no window '{}'", p.glc, window));
  }
  return s;
}

}  // namespace pdc::analysis
