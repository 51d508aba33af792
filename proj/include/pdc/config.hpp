#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "pdc/coupled_modes.hpp"
#include "pdc/optics.hpp"
#include "pdc/phasematch.hpp"
#include "pdc/splitstep.hpp"

namespace pdc::config {

using Json = nlohmann::json;

struct ResonanceScan {
  double beta_min_deg = -12.0;
  double beta_max_deg = 12.0;
  double step_deg = 0.25;
  double tolerance_deg = 1e-4;
};

struct AnalysisSettings {
  double window_lambda_nm = 5.0;
  double window_theta_deg = 0.2;
  double slit_deg = 0.05;
  std::vector<double> glc_sweep{4.0, 5.0, 6.0, 7.0};
  double confidence = 0.95;
};

// Fully resolved run configuration. Angles are radians from here on.
struct RunConfig {
  Json document;  // merged, with "auto" entries left as written
  optics::CrystalConfig crystal{};
  bool cut_auto = true;
  double nominal_cut_deg = 33.48;
  optics::ExternalPumps pumps{};
  pm::SurfaceGrid surface{};
  double pm_tolerance = 1e-9;
  ResonanceScan resonance{};
  cm::CouplingSpec coupling{};
  std::vector<double> sweep_glc;
  sim::SimConfig sim{};
  int batch = 4;
  AnalysisSettings analysis{};
  std::uint64_t seed = 1;
  int threads = 0;  // 0 = hardware concurrency
  int shots = 50;

  int worker_count() const;
  // Copy with the crystal rotated; the simulator config and document follow.
  RunConfig with_rotation(double beta_rad) const;
};

// PDC_DEFAULTS if set, else the copy shipped with the build.
std::filesystem::path defaults_path();
Json load_document(const std::filesystem::path& path);

// Keys of `overlay` absent from `base` are rejected with their JSON pointer.
void check_known_keys(const Json& base, const Json& overlay, const std::string& prefix = "");

// Environment overrides: PDC_SIM__N_Z=150 sets /sim/n_z. Values are parsed as
// JSON when possible and taken as strings otherwise. PDC_DEFAULTS and
// PDC_FFTW_WISDOM are not overrides.
void apply_env_overrides(Json& doc, const std::vector<std::string>& environment);
std::vector<std::string> process_environment();

RunConfig resolve(const Json& doc);

// defaults <- file (merge patch) <- environment, then resolve.
RunConfig load(const std::optional<std::filesystem::path>& user_file,
               const std::vector<std::string>& environment = process_environment());

}  // namespace pdc::config
