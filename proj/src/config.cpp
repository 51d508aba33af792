#include "pdc/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <thread>

#include <fmt/format.h>

#include "pdc/errors.hpp"
#include "pdc/rootfind.hpp"
#include "pdc/units.hpp"

extern char** environ;

namespace pdc::config {

namespace {

std::string join(const std::string& prefix, const std::string& key) { return prefix + "/" + key; }

const Json& at(const Json& doc, const std::string& ptr) {
  const Json::json_pointer p(ptr);
  if (!doc.contains(p)) throw ConfigError(ptr, "missing");
  return doc.at(p);
}

double number(const Json& doc, const std::string& ptr) {
  const auto& v = at(doc, ptr);
  if (!v.is_number()) throw ConfigError(ptr, fmt::format("expected a number, got {}", v.dump()));
  const double x = v.get<double>();
  if (!std::isfinite(x)) throw ConfigError(ptr, "must be finite");
  return x;
}

double positive(const Json& doc, const std::string& ptr) {
  const double x = number(doc, ptr);
  if (!(x > 0.0)) throw ConfigError(ptr, fmt::format("must be positive, got {}", x));
  return x;
}

int integer(const Json& doc, const std::string& ptr, int lo) {
  const auto& v = at(doc, ptr);
  if (!v.is_number_integer()) throw ConfigError(ptr, fmt::format("expected an integer, got {}", v.dump()));
  const auto x = v.get<long long>();
  if (x < lo || x > 1'000'000'000) throw ConfigError(ptr, fmt::format("must be >= {}, got {}", lo, x));
  return static_cast<int>(x);
}

bool boolean(const Json& doc, const std::string& ptr) {
  const auto& v = at(doc, ptr);
  if (!v.is_boolean()) throw ConfigError(ptr, fmt::format("expected true or false, got {}", v.dump()));
  return v.get<bool>();
}

std::vector<double> numbers(const Json& doc, const std::string& ptr, std::size_t n) {
  const auto& v = at(doc, ptr);
  if (!v.is_array()) throw ConfigError(ptr, "expected an array");
  if (n != 0 && v.size() != n) throw ConfigError(ptr, fmt::format("expected {} entries, got {}", n, v.size()));
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(number(doc, fmt::format("{}/{}", ptr, i)));
  return out;
}

std::pair<double, double> range(const Json& doc, const std::string& ptr, bool strict) {
  const auto r = numbers(doc, ptr, 2);
  if (strict ? !(r[0] < r[1]) : !(r[0] <= r[1])) {
    throw ConfigError(ptr, fmt::format("lower bound {} exceeds upper bound {}", r[0], r[1]));
  }
  return {r[0], r[1]};
}

optics::SellmeierTerms terms(const Json& doc, const std::string& ptr) {
  return {number(doc, ptr + "/a"), number(doc, ptr + "/b"), number(doc, ptr + "/c"),
          number(doc, ptr + "/d")};
}

// Grid spacing: null picks the band-limited default.
double spacing(const Json& doc, const std::string& ptr, double fallback) {
  const Json::json_pointer p(ptr);
  if (!doc.contains(p) || doc.at(p).is_null()) return fallback;
  return positive(doc, ptr);
}

double external_from_internal(double theta_int, const optics::ExternalPumps& p,
                              const optics::CrystalConfig& crystal, const std::string& ptr) {
  if (theta_int == 0.0) return 0.0;
  const auto f = [&](double ext) {
    return optics::extraordinary_internal_tilt(ext, p.wavelength_nm, crystal) - theta_int;
  };
  const double lim = deg_to_rad(89.0);
  const auto root = bisect(f, -lim, lim, 1e-15);
  if (!root) throw ConfigError(ptr, "internal tilt has no external counterpart");
  return *root;
}

std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return std::tolower(c); });
  return s;
}

}  // namespace

int RunConfig::worker_count() const {
  if (threads > 0) return threads;
  return std::max(1u, std::thread::hardware_concurrency());
}

RunConfig RunConfig::with_rotation(double beta_rad) const {
  RunConfig out = *this;
  out.crystal.rotation_rad = beta_rad;
  out.sim.crystal.rotation_rad = beta_rad;
  out.document["crystal"]["rotation_deg"] = rad_to_deg(beta_rad);
  return out;
}

std::filesystem::path defaults_path() {
  if (const char* p = std::getenv("PDC_DEFAULTS"); p && *p) return p;
  return PDC_DEFAULTS_PATH;
}

Json load_document(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("", fmt::format("cannot open config file '{}'", path.string()));
  try {
    return Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError("", fmt::format("'{}' is not valid JSON: {}", path.string(), e.what()));
  }
}

void check_known_keys(const Json& base, const Json& overlay, const std::string& prefix) {
  if (!overlay.is_object()) return;
  for (const auto& [key, value] : overlay.items()) {
    const auto ptr = join(prefix, key);
    std::string probe = key;
    if (const auto pos = probe.rfind("_int_deg"); pos != std::string::npos && pos + 8 == probe.size()) {
      probe = probe.substr(0, pos) + "_deg";
    }
    if (!base.is_object() || !base.contains(probe)) throw ConfigError(ptr, "unknown key");
    if (probe == key && base.at(key).is_object()) check_known_keys(base.at(key), value, ptr);
  }
}

std::vector<std::string> process_environment() {
  std::vector<std::string> out;
  for (char** e = environ; e && *e; ++e) out.emplace_back(*e);
  return out;
}

void apply_env_overrides(Json& doc, const std::vector<std::string>& environment) {
  for (const auto& entry : environment) {
    const auto eq = entry.find('=');
    if (eq == std::string::npos || entry.rfind("PDC_", 0) != 0) continue;
    const std::string name = entry.substr(0, eq);
    if (name == "PDC_DEFAULTS" || name == "PDC_FFTW_WISDOM") continue;
    const std::string value = entry.substr(eq + 1);
    std::string ptr;
    std::string rest = name.substr(4);
    for (std::size_t pos; (pos = rest.find("__")) != std::string::npos; rest = rest.substr(pos + 2)) {
      ptr += "/" + lower(rest.substr(0, pos));
    }
    ptr += "/" + lower(rest);
    const Json::json_pointer p(ptr);
    if (!doc.contains(p)) throw ConfigError(ptr, fmt::format("unknown key set by {}", name));
    Json v;
    try {
      v = Json::parse(value);
    } catch (const Json::parse_error&) {
      v = value;
    }
    doc[p] = v;
  }
}

RunConfig resolve(const Json& doc) {
  RunConfig c;
  c.document = doc;

  const auto [lo_um, hi_um] = range(doc, "/crystal/sellmeier/range_um", true);
  try {
    c.crystal.dispersion = optics::SellmeierSet(terms(doc, "/crystal/sellmeier/ordinary"),
                                                terms(doc, "/crystal/sellmeier/extraordinary"),
                                                lo_um, hi_um);
  } catch (const DomainError& e) {
    throw ConfigError("/crystal/sellmeier", e.what());
  }
  c.crystal.length_um = 1000.0 * positive(doc, "/crystal/length_mm");
  c.crystal.rotation_rad = deg_to_rad(number(doc, "/crystal/rotation_deg"));
  c.nominal_cut_deg = number(doc, "/crystal/nominal_cut_deg");
  c.pumps.wavelength_nm = positive(doc, "/pumps/wavelength_nm");

  const auto& cut = at(doc, "/crystal/cut_deg");
  if (cut.is_string()) {
    const auto mode = cut.get<std::string>();
    if (mode == "auto") {
      try {
        c.crystal.cut_rad = optics::phase_matched_cut(c.crystal.dispersion, c.pumps.wavelength_nm);
      } catch (const Error& e) {
        throw ConfigError("/crystal/cut_deg", fmt::format("auto cut failed: {}", e.what()));
      }
    } else if (mode == "nominal") {
      c.cut_auto = false;
      c.crystal.cut_rad = deg_to_rad(c.nominal_cut_deg);
    } else {
      throw ConfigError("/crystal/cut_deg", fmt::format("expected a number, \"auto\" or \"nominal\", got \"{}\"", mode));
    }
  } else {
    c.cut_auto = false;
    c.crystal.cut_rad = deg_to_rad(number(doc, "/crystal/cut_deg"));
  }
  c.crystal.validate();

  for (int j = 0; j < 2; ++j) {
    const auto ptr = fmt::format("/pumps/beams/{}", j);
    auto& b = c.pumps.beams[j];
    b.waist_um = positive(doc, ptr + "/waist_um");
    b.duration_fs = number(doc, ptr + "/duration_fs");
    if (b.duration_fs < 0.0) throw ConfigError(ptr + "/duration_fs", "must be >= 0 (0 = continuous wave)");
    b.energy_uj = number(doc, ptr + "/energy_uj");
    if (b.energy_uj < 0.0) throw ConfigError(ptr + "/energy_uj", "must be >= 0");
  }
  if (doc.contains(Json::json_pointer("/pumps/tilt_int_deg"))) {
    const auto t = numbers(doc, "/pumps/tilt_int_deg", 2);
    for (int j = 0; j < 2; ++j) {
      c.pumps.tilt_ext_rad[j] = external_from_internal(deg_to_rad(t[j]), c.pumps, c.crystal,
                                                       fmt::format("/pumps/tilt_int_deg/{}", j));
    }
  } else {
    const auto t = numbers(doc, "/pumps/tilt_deg", 2);
    for (int j = 0; j < 2; ++j) {
      if (std::abs(t[j]) >= 90.0) throw ConfigError(fmt::format("/pumps/tilt_deg/{}", j), "must lie in (-90, 90)");
      c.pumps.tilt_ext_rad[j] = deg_to_rad(t[j]);
    }
  }

  const auto [bmin, bmax] = range(doc, "/phasematch/band_nm", true);
  c.surface.band = {bmin, bmax};
  const auto [txmin, txmax] = range(doc, "/phasematch/theta_x_deg", true);
  c.surface.theta_x_min_deg = txmin;
  c.surface.theta_x_max_deg = txmax;
  c.surface.n_theta_x = integer(doc, "/phasematch/n_theta_x", 2);
  const auto [tymin, tymax] = range(doc, "/phasematch/theta_y_deg", false);
  c.surface.theta_y_min_deg = tymin;
  c.surface.theta_y_max_deg = tymax;
  c.surface.n_theta_y = integer(doc, "/phasematch/n_theta_y", 1);
  c.surface.n_lambda = integer(doc, "/phasematch/n_lambda", 2);
  c.pm_tolerance = positive(doc, "/phasematch/tolerance");
  if (bmin / 1000.0 < lo_um || bmax / 1000.0 > hi_um) {
    throw ConfigError("/phasematch/band_nm", fmt::format("band leaves the dispersion range {}-{} nm",
                                                         1000 * lo_um, 1000 * hi_um));
  }

  c.resonance.beta_min_deg = number(doc, "/resonance/beta_min_deg");
  c.resonance.beta_max_deg = number(doc, "/resonance/beta_max_deg");
  if (!(c.resonance.beta_min_deg < c.resonance.beta_max_deg)) {
    throw ConfigError("/resonance/beta_max_deg", "must exceed beta_min_deg");
  }
  c.resonance.step_deg = positive(doc, "/resonance/step_deg");
  c.resonance.tolerance_deg = positive(doc, "/resonance/tolerance_deg");

  c.coupling.modes = integer(doc, "/coupling/modes", 2);
  c.coupling.g_per_mm = number(doc, "/coupling/g_per_mm");
  c.coupling.length_mm = positive(doc, "/coupling/length_mm");
  const auto& mis = at(doc, "/coupling/mismatch_per_mm");
  if (mis.is_array()) {
    c.coupling.mismatch_per_mm = numbers(doc, "/coupling/mismatch_per_mm", 0);
  } else if (const double d = number(doc, "/coupling/mismatch_per_mm"); d != 0.0) {
    c.coupling.mismatch_per_mm.assign(cm::coupling_edges(c.coupling.modes).size(), d);
  }
  c.coupling.validate();
  {
    const auto s = numbers(doc, "/coupling/sweep_glc", 3);
    const double n = s[2];
    if (n < 2 || n != std::floor(n)) throw ConfigError("/coupling/sweep_glc/2", "step count must be an integer >= 2");
    if (!(s[0] < s[1])) throw ConfigError("/coupling/sweep_glc", "start must be below end");
    for (int i = 0; i < static_cast<int>(n); ++i) c.sweep_glc.push_back(s[0] + (s[1] - s[0]) * i / (n - 1));
  }

  auto& s = c.sim;
  s.crystal = c.crystal;
  s.pumps = c.pumps;
  const auto [sbmin, sbmax] = range(doc, "/sim/band_nm", true);
  s.band = {sbmin, sbmax};
  s.max_angle_deg = positive(doc, "/sim/max_angle_deg");
  s.guard = number(doc, "/sim/guard");
  if (s.guard < 0.0) throw ConfigError("/sim/guard", "must be >= 0");
  const int nx = integer(doc, "/sim/grid/nx", 1);
  const int ny = integer(doc, "/sim/grid/ny", 1);
  const int nt = integer(doc, "/sim/grid/nt", 1);
  const auto g = sim::default_grid(c.pumps.wavelength_nm, s.band, s.max_angle_deg, s.guard, nx, nt, ny);
  s.grid = g;
  s.grid.dx = spacing(doc, "/sim/grid/dx", g.dx);
  s.grid.dy = ny > 1 ? spacing(doc, "/sim/grid/dy", s.grid.dx) : 0.0;
  s.grid.dt = spacing(doc, "/sim/grid/dt", g.dt);
  s.n_z = integer(doc, "/sim/n_z", 1);
  s.glc = number(doc, "/sim/glc");
  s.reference_energy_uj = number(doc, "/sim/reference_energy_uj");
  s.coupling = number(doc, "/sim/coupling");
  s.depletion = boolean(doc, "/sim/depletion");
  s.pump_photons_per_cell = number(doc, "/sim/pump_photons_per_cell");
  s.noise_variance = number(doc, "/sim/noise_variance");
  s.edge_fraction = number(doc, "/sim/edge_fraction");
  {
    const auto& f = at(doc, "/sim/fft");
    const std::string v = f.is_string() ? f.get<std::string>() : "";
    if (v == "estimate") {
      s.fft_rigor = fft::Rigor::estimate;
    } else if (v == "measure") {
      s.fft_rigor = fft::Rigor::measure;
    } else {
      throw ConfigError("/sim/fft", fmt::format("expected \"estimate\" or \"measure\", got {}", f.dump()));
    }
  }
  c.batch = integer(doc, "/sim/batch", 1);

  c.analysis.window_lambda_nm = positive(doc, "/analysis/window_lambda_nm");
  c.analysis.window_theta_deg = positive(doc, "/analysis/window_theta_deg");
  c.analysis.slit_deg = positive(doc, "/analysis/slit_deg");
  c.analysis.glc_sweep = numbers(doc, "/analysis/glc_sweep", 0);
  if (c.analysis.glc_sweep.size() < 3) throw ConfigError("/analysis/glc_sweep", "need at least 3 gain values");
  for (std::size_t i = 0; i < c.analysis.glc_sweep.size(); ++i) {
    if (!(c.analysis.glc_sweep[i] > 0.0)) throw ConfigError(fmt::format("/analysis/glc_sweep/{}", i), "must be positive");
  }
  c.analysis.confidence = number(doc, "/analysis/confidence");
  if (!(c.analysis.confidence > 0.0 && c.analysis.confidence < 1.0)) {
    throw ConfigError("/analysis/confidence", "must lie in (0, 1)");
  }

  {
    const auto& v = at(doc, "/run/seed");
    if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<long long>() >= 0)) {
      throw ConfigError("/run/seed", fmt::format("expected a non-negative integer, got {}", v.dump()));
    }
    c.seed = v.get<std::uint64_t>();
  }
  c.threads = integer(doc, "/run/threads", 0);
  c.shots = integer(doc, "/run/shots", 1);
  s.seed = c.seed;
  s.validate();
  return c;
}

RunConfig load(const std::optional<std::filesystem::path>& user_file,
               const std::vector<std::string>& environment) {
  Json doc = load_document(defaults_path());
  if (user_file) {
    const Json user = load_document(*user_file);
    if (!user.is_object()) throw ConfigError("", "config root must be an object");
    check_known_keys(doc, user);
    if (user.contains("pumps") && user["pumps"].contains("tilt_int_deg")) {
      if (user["pumps"].contains("tilt_deg")) {
        throw ConfigError("/pumps/tilt_int_deg", "give either tilt_deg or tilt_int_deg, not both");
      }
      doc["pumps"].erase("tilt_deg");
    }
    doc.merge_patch(user);
  }
  apply_env_overrides(doc, environment);
  return resolve(doc);
}

}  // namespace pdc::config
