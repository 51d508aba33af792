#pragma once

#include <functional>
#include <string>
#include <vector>

#include "pdc/analysis.hpp"
#include "pdc/splitstep.hpp"

namespace pdc::analysis {

struct HotspotTarget {
  double lambda_nm = 0.0;
  double theta_x_ext_deg = 0.0;
  bool coalesced = false;  // roots merged at a resonance; degenerate shared mode used
};

// Shared-signal hot-spot of a pump pair on the theta_y = 0 section. Where the
// shared roots have merged (resonance) the degenerate shared mode is returned.
HotspotTarget hotspot_target(const optics::PumpPair& pumps, const optics::CrystalConfig& crystal);

Window window_at(const std::string& name, const HotspotTarget& t, double lambda_width_nm,
                 double theta_width_deg);

struct SweepSettings {
  std::vector<double> glc{4.0, 5.0, 6.0, 7.0};
  int shots = 50;
  int threads = 1;
  int batch = 4;
  double slit_deg = 0.05;
  std::function<void(const std::string&)> log;
};

struct SweepPoint {
  double glc = 0.0;
  double energy_uj = 0.0;  // per beam
  std::vector<WindowCounts> windows;
  double seconds = 0.0;
};

// Pump energy is swept as E_ref (g / g_ref)^2 per beam at fixed coupling, so
// sqrt(E) is proportional to the gain. With single_pump the second beam is
// switched off. on_map sees the mean (lambda, q_x) map of each point.
std::vector<SweepPoint> run_sweep(const sim::SimConfig& base, bool single_pump,
                                  const std::vector<Window>& windows, const SweepSettings& settings,
                                  const std::function<void(const SweepPoint&, const SpectralMap&)>& on_map = {});

// Per-beam energy against integrated counts of one window.
EnergySeries series_of(const std::vector<SweepPoint>& points, const std::string& window);

}  // namespace pdc::analysis
