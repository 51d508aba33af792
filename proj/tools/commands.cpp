#include "commands.hpp"

#include <cmath>
#include <fstream>
#include <iostream>

#include <fmt/format.h>

#include "pdc/analysis.hpp"
#include "pdc/coupled_modes.hpp"
#include "pdc/errors.hpp"
#include "pdc/gain_sweep.hpp"
#include "pdc/phasematch.hpp"
#include "pdc/splitstep.hpp"

namespace pdc::cli {

namespace fs = std::filesystem;
using io::CsvWriter;

void Context::log(const std::string& msg) const {
  if (!quiet) std::cerr << msg << std::endl;
}

manifest::RunManifest Context::begin_manifest() const { return begin_manifest(cfg); }

manifest::RunManifest Context::begin_manifest(const config::RunConfig& c) const {
  return manifest::begin(command, c.document, c.seed);
}

std::string beta_tag(double beta_deg) { return fmt::format("beta{:+.2f}", beta_deg); }

const std::vector<std::string> kPointColumns{"lambda_nm", "theta_x_ext_deg", "theta_y_ext_deg", "branch", "D1", "D2"};

void write_points_csv(const fs::path& path, const std::vector<pm::SurfacePoint>& pts) {
  CsvWriter w(path, kPointColumns);
  for (const auto& p : pts) {
    w.cell(p.lambda_nm).cell(p.theta_x_ext_deg).cell(p.theta_y_ext_deg).cell(p.branch).cell(p.d1).cell(p.d2);
    w.end_row();
  }
  w.close();
}

namespace {

config::RunConfig rotated(const Context& ctx, const BetaOption& b) {
  return b.beta_deg ? ctx.cfg.with_rotation(deg_to_rad(*b.beta_deg)) : ctx.cfg;
}

std::vector<pm::SurfacePoint> surface_points(const config::RunConfig& c, int pump) {
  const auto pumps = optics::resolve_pumps(c.pumps, c.crystal);
  std::vector<pm::SurfacePoint> all;
  for (int j = 1; j <= 2; ++j) {
    if (pump != 0 && pump != j) continue;
    const auto tr = c.surface.n_theta_y == 1
                        ? pm::trace_pm_section(j, c.surface, c.pm_tolerance, pumps, c.crystal)
                        : pm::trace_pm_surface(j, c.surface, c.pm_tolerance, pumps, c.crystal);
    all.insert(all.end(), tr.points.begin(), tr.points.end());
  }
  return all;
}

void write_modes_csv(const fs::path& path, const config::RunConfig& c) {
  const auto pumps = optics::resolve_pumps(c.pumps, c.crystal);
  const pm::Mismatch mm(pumps, c.crystal);
  const auto fam = pm::sample_mode_family(pumps, c.crystal, c.surface.band, c.surface.n_lambda);
  CsvWriter w(path, kPointColumns);
  for (std::size_t i = 0; i < fam.lambda_nm.size(); ++i) {
    const double l = fam.lambda_nm[i];
    const std::pair<const char*, double> rows[] = {
        {"shared", fam.theta0_ext[i]}, {"coupled1", fam.theta1_ext[i]}, {"coupled2", fam.theta2_ext[i]}};
    for (const auto& [name, th] : rows) {
      const auto m = pm::mode_from_external(th, 0.0, l, pumps.wavelength_nm);
      w.cell(l).cell(rad_to_deg(th)).cell(0.0).cell(std::string(name)).cell(mm.or_nan(1, m)).cell(mm.or_nan(2, m));
      w.end_row();
    }
  }
  w.close();
}

std::vector<double> parse_sweep(const std::string& s) {
  std::vector<double> parts;
  std::size_t start = 0;
  for (;;) {
    const auto colon = s.find(':', start);
    const auto tok = s.substr(start, colon == std::string::npos ? std::string::npos : colon - start);
    try {
      std::size_t used = 0;
      parts.push_back(std::stod(tok, &used));
      if (used != tok.size()) throw std::invalid_argument(tok);
    } catch (const std::exception&) {
      throw ConfigError("/coupling/sweep_glc", fmt::format("cannot parse '{}' in --sweep {}", tok, s));
    }
    if (colon == std::string::npos) break;
    start = colon + 1;
  }
  if (parts.size() != 3 || parts[2] < 2 || parts[2] != std::floor(parts[2]) || !(parts[0] < parts[1])) {
    throw ConfigError("/coupling/sweep_glc", fmt::format("--sweep expects from:to:steps with steps >= 2, got {}", s));
  }
  std::vector<double> out;
  const int n = static_cast<int>(parts[2]);
  for (int i = 0; i < n; ++i) out.push_back(parts[0] + (parts[1] - parts[0]) * i / (n - 1));
  return out;
}

}  // namespace

int pm_surface(const Context& ctx, const BetaOption& beta, int pump) {
  const auto c = rotated(ctx, beta);
  manifest::ArtifactDir dir(ctx.out);
  auto m = ctx.begin_manifest(c);
  const auto pts = surface_points(c, pump);
  write_points_csv(dir.path("pm_surface.csv"), pts);
  m.results["points"] = pts.size();
  m.results["beta_deg"] = rad_to_deg(c.crystal.rotation_rad);
  dir.commit(m);
  ctx.log(fmt::format("{} surface points -> {}", pts.size(), (ctx.out / "pm_surface.csv").string()));
  return 0;
}

int modes(const Context& ctx, const BetaOption& beta) {
  const auto c = rotated(ctx, beta);
  manifest::ArtifactDir dir(ctx.out);
  auto m = ctx.begin_manifest(c);
  write_modes_csv(dir.path("modes.csv"), c);
  const auto pumps = optics::resolve_pumps(c.pumps, c.crystal);
  try {
    const auto hs = pm::shared_hotspots(pumps, c.crystal, c.surface.band);
    fmt::print("shared signal {:.2f} nm at {:.3f} deg, shared idler {:.2f} nm\n", hs.signal_nm,
               rad_to_deg(hs.roots.front().theta_x_ext), hs.idler_nm);
    m.results["shared_signal_nm"] = hs.signal_nm;
    m.results["shared_idler_nm"] = hs.idler_nm;
  } catch (const NotFoundError& e) {
    fmt::print("no shared hot-spot root in band: {}\n", e.what());
  }
  dir.commit(m);
  return 0;
}

int resonance(const Context& ctx) {
  const auto& c = ctx.cfg;
  manifest::ArtifactDir dir(ctx.out);
  auto m = ctx.begin_manifest();
  const auto r = pm::find_resonance(c.pumps, c.crystal, deg_to_rad(c.resonance.beta_min_deg),
                                    deg_to_rad(c.resonance.beta_max_deg), deg_to_rad(c.resonance.step_deg),
                                    deg_to_rad(c.resonance.tolerance_deg));
  CsvWriter w(dir.path("resonance.csv"), kPointColumns);
  m.results["beta_deg"] = nlohmann::json::array();
  for (const auto& root : r.roots) {
    const double b = rad_to_deg(root.beta_rad);
    fmt::print("{:.2f}  ({}, beta = {:.4f} deg)\n", b, pm::to_string(root.branch), b);
    m.results["beta_deg"].push_back(b);
    // Shared hot-spot at the resonance rotation, the coalesced mode.
    const auto rc = c.with_rotation(root.beta_rad);
    const auto pumps = optics::resolve_pumps(rc.pumps, rc.crystal);
    const auto t = analysis::hotspot_target(pumps, rc.crystal);
    const pm::Mismatch mm(pumps, rc.crystal);
    const auto mode = pm::mode_from_external(deg_to_rad(t.theta_x_ext_deg), 0.0, t.lambda_nm, pumps.wavelength_nm);
    w.cell(t.lambda_nm).cell(t.theta_x_ext_deg).cell(0.0).cell(pm::to_string(root.branch))
        .cell(mm.or_nan(1, mode)).cell(mm.or_nan(2, mode));
    w.end_row();
  }
  w.close();
  CsvWriter s(dir.path("resonance_scan.csv"), {"beta_deg", "minus_residual", "plus_residual"});
  for (const auto& p : r.trace) {
    s.cell(rad_to_deg(p.beta_rad)).cell(p.minus).cell(p.plus);
    s.end_row();
  }
  s.close();
  dir.commit(m);
  return 0;
}

int gain(const Context& ctx, const GainArgs& args) {
  const int n = args.modes.value_or(ctx.cfg.coupling.modes);
  std::vector<double> glcs = ctx.cfg.sweep_glc;
  if (args.sweep) glcs = parse_sweep(*args.sweep);
  if (args.glc) glcs = {*args.glc};
  manifest::ArtifactDir dir(ctx.out);
  auto m = ctx.begin_manifest();
  double exponent = std::nan("");
  if (glcs.size() >= 3) {
    const auto fit = cm::gain_exponent(n, glcs);
    exponent = fit.value;
    m.results["exponent"] = fit.value;
    m.results["ci"] = {fit.ci_low, fit.ci_high};
    if (!fit.warning.empty()) ctx.log("warning: " + fit.warning);
  }
  CsvWriter w(dir.path("gain.csv"), {"glc", "n_shared", "n_c1", "n_c2", "ratio", "fitted_exponent"});
  for (const double g : glcs) {
    const auto row = cm::gain_row(n, g, ctx.cfg.coupling.length_mm);
    w.cell(row.glc).cell(row.n_shared).cell(row.n_c1).cell(row.n_c2).cell(row.ratio).cell(exponent);
    w.end_row();
  }
  w.close();
  const auto gains = cm::gain_eigenvalues({n, 1.0, 1.0, {}});
  fmt::print("{}-mode gains (units of g):", n);
  for (double v : gains) fmt::print(" {:.12f}", v);
  fmt::print("\n");
  if (!std::isnan(exponent)) fmt::print("fitted exponent {:.6f}\n", exponent);
  dir.commit(m);
  return 0;
}

void write_map(const Context& ctx, const manifest::ArtifactDir& dir, const std::string& stem,
               const SpectralMap& map, const nlohmann::json& extra) {
  io::write_grid(dir.path(stem), map.data, {map.rows(), map.cols()},
                 {{"lambda", "nm", map.lambda_nm}, {"q_x", "rad/um", map.qx}}, extra);
  if (ctx.format == "bin") return;
  CsvWriter w(dir.path(stem + ".csv"), {"lambda_nm", "q_x_rad_per_um", "theta_x_ext_deg", "intensity"});
  for (std::size_t r = 0; r < map.rows(); ++r) {
    for (std::size_t col = 0; col < map.cols(); ++col) {
      w.cell(map.lambda_nm[r]).cell(map.qx[col]).cell(rad_to_deg(map.theta_x_ext(r, col))).cell(map.at(r, col));
      w.end_row();
    }
  }
  w.close();
}

namespace {

struct SimOutputs {
  SpectralMap map;
  std::vector<double> far;
  sim::EnsembleResult ensemble;
};

SimOutputs run_and_write(const Context& ctx, const manifest::ArtifactDir& dir, const sim::SimConfig& cfg,
                         const std::string& prefix, manifest::RunManifest& m) {
  sim::Propagator prop(cfg);
  sim::EnsembleOptions opts;
  opts.shots = ctx.cfg.shots;
  opts.threads = ctx.cfg.worker_count();
  opts.batch = ctx.cfg.batch;
  if (!ctx.quiet) {
    opts.progress = [&](int done, int total) { std::cerr << fmt::format("\r{}shot {}/{}", prefix, done, total) << std::flush; };
  }
  SimOutputs o;
  o.ensemble = sim::run_ensemble(prop, opts);
  if (!ctx.quiet) std::cerr << '\n';
  const auto& g = o.ensemble.grid;
  o.map = sim::angular_spectrum(o.ensemble.mean_intensity, g, cfg.pumps.wavelength_nm, ctx.cfg.analysis.slit_deg);
  o.far = sim::far_field(o.ensemble.mean_intensity, g, cfg.band, cfg.pumps.wavelength_nm);

  const nlohmann::json extra{{"quantity", "mean photon number per mode, vacuum subtracted"},
                             {"shots", o.ensemble.shots},
                             {"beta_deg", rad_to_deg(cfg.crystal.rotation_rad)}};
  write_map(ctx, dir, prefix + "angular_spectrum", o.map, extra);

  std::vector<double> qx(g.nx), qy(g.ny);
  for (int i = 0; i < g.nx; ++i) qx[i] = g.qx(i);
  for (int j = 0; j < g.ny; ++j) qy[j] = g.qy(j);
  io::write_grid(dir.path(prefix + "far_field"), o.far, {static_cast<std::size_t>(g.ny), static_cast<std::size_t>(g.nx)},
                 {{"q_y", "rad/um", qy}, {"q_x", "rad/um", qx}},
                 {{"quantity", "band-integrated photon number, DFT order"}, {"band_nm", {cfg.band.min_nm, cfg.band.max_nm}}});

  CsvWriter lm(dir.path(prefix + "lambda_marginal.csv"), {"lambda_nm", "intensity"});
  for (std::size_t r = 0; r < o.map.rows(); ++r) {
    double s = 0.0;
    for (std::size_t col = 0; col < o.map.cols(); ++col) s += o.map.at(r, col);
    lm.cell(o.map.lambda_nm[r]).cell(s);
    lm.end_row();
  }
  lm.close();

  const auto pumps = optics::resolve_pumps(cfg.pumps, cfg.crystal);
  try {
    const auto t = analysis::hotspot_target(pumps, cfg.crystal);
    std::size_t best = 0;
    for (std::size_t r = 0; r < o.map.rows(); ++r) {
      if (std::abs(o.map.lambda_nm[r] - t.lambda_nm) < std::abs(o.map.lambda_nm[best] - t.lambda_nm)) best = r;
    }
    CsvWriter cut(dir.path(prefix + "section_shared.csv"), {"lambda_nm", "theta_x_ext_deg", "intensity"});
    for (std::size_t col = 0; col < o.map.cols(); ++col) {
      cut.cell(o.map.lambda_nm[best]).cell(rad_to_deg(o.map.theta_x_ext(best, col))).cell(o.map.at(best, col));
      cut.end_row();
    }
    cut.close();
    m.results[prefix + "shared_lambda_nm"] = t.lambda_nm;
    m.results[prefix + "shared_theta_deg"] = t.theta_x_ext_deg;
  } catch (const Error& e) {
    ctx.log(fmt::format("no shared-mode section: {}", e.what()));
  }
  m.results[prefix + "evanescent_modes"] = o.ensemble.evanescent_modes;
  m.results[prefix + "shots"] = o.ensemble.shots;
  m.results[prefix + "sim_seconds"] = o.ensemble.seconds;
  return o;
}

}  // namespace

int simulate(const Context& ctx, const SimulateArgs& args) {
  auto c = rotated(ctx, args.beta);
  auto cfg = c.sim;
  if (args.glc) {
    if (!(*args.glc > 0.0) || !(cfg.glc > 0.0)) throw ConfigError("/sim/glc", "gain must be positive");
    const double e = cfg.reference_energy_uj * std::pow(*args.glc / cfg.glc, 2);
    for (auto& b : cfg.pumps.beams) b.energy_uj = e;
  }
  if (args.single_pump) cfg.pumps.beams[1].energy_uj = 0.0;
  cfg.validate();
  for (std::size_t j = 0; j < 2; ++j) c.document["pumps"]["beams"][j]["energy_uj"] = cfg.pumps.beams[j].energy_uj;
  manifest::ArtifactDir dir(ctx.out);
  auto m = ctx.begin_manifest(c);
  m.results["beam_energy_uj"] = {cfg.pumps.beams[0].energy_uj, cfg.pumps.beams[1].energy_uj};
  m.results["beta_deg"] = rad_to_deg(cfg.crystal.rotation_rad);
  run_and_write(ctx, dir, cfg, "", m);
  dir.commit(m);
  ctx.log(fmt::format("wrote {}", ctx.out.string()));
  return 0;
}

namespace {

struct LoadedRun {
  fs::path dir;
  SpectralMap map;
  nlohmann::json manifest;
  double energy_uj = 0.0;
};

LoadedRun load_run(const fs::path& d) {
  LoadedRun r;
  r.dir = d;
  std::ifstream mf(d / "manifest.json");
  if (!mf) throw ConfigError("", fmt::format("'{}' has no manifest.json", d.string()));
  r.manifest = nlohmann::json::parse(mf);
  const auto g = io::read_grid(d / "angular_spectrum");
  if (g.shape.size() != 2) throw IntegrityError(fmt::format("{}: angular spectrum must be 2-D", d.string()));
  r.map.lambda_nm = g.sidecar.at("axes").at(0).at("values").get<std::vector<double>>();
  r.map.qx = g.sidecar.at("axes").at(1).at("values").get<std::vector<double>>();
  r.map.data = g.data;
  r.map.pump_wavelength_nm = r.manifest.at("config").at("pumps").at("wavelength_nm").get<double>();
  const auto& res = r.manifest.at("results");
  r.energy_uj = res.contains("beam_energy_uj") ? res["beam_energy_uj"][0].get<double>()
                                               : r.manifest.at("config").at("pumps").at("beams").at(0).at("energy_uj").get<double>();
  return r;
}

std::vector<LoadedRun> load_runs(const fs::path& p) {
  std::vector<LoadedRun> out;
  if (fs::exists(p / "manifest.json")) {
    out.push_back(load_run(p));
    return out;
  }
  if (!fs::is_directory(p)) throw ConfigError("", fmt::format("maps directory '{}' does not exist", p.string()));
  std::vector<fs::path> dirs;
  for (const auto& e : fs::directory_iterator(p)) {
    if (e.is_directory() && fs::exists(e.path() / "manifest.json")) dirs.push_back(e.path());
  }
  std::sort(dirs.begin(), dirs.end());
  for (const auto& d : dirs) out.push_back(load_run(d));
  if (out.empty()) throw ConfigError("", fmt::format("no simulate outputs under '{}'", p.string()));
  return out;
}

std::vector<analysis::Window> parse_windows(const nlohmann::json& j, const config::RunConfig& c) {
  std::vector<analysis::Window> out;
  if (!j.contains("windows") || !j["windows"].is_array()) throw ConfigError("/windows", "expected an array");
  for (std::size_t i = 0; i < j["windows"].size(); ++i) {
    const auto& w = j["windows"][i];
    const auto ptr = fmt::format("/windows/{}", i);
    for (const char* k : {"name", "lambda_nm", "theta_deg"}) {
      if (!w.contains(k)) throw ConfigError(ptr + "/" + k, "missing");
    }
    analysis::Window win;
    win.name = w["name"].get<std::string>();
    win.lambda_center_nm = w["lambda_nm"].get<double>();
    win.theta_center_deg = w["theta_deg"].get<double>();
    win.lambda_width_nm = w.value("lambda_width_nm", c.analysis.window_lambda_nm);
    win.theta_width_deg = w.value("theta_width_deg", c.analysis.window_theta_deg);
    out.push_back(win);
  }
  return out;
}

}  // namespace

int analyze(const Context& ctx, const AnalyzeArgs& args) {
  const auto runs = load_runs(args.maps);
  std::vector<analysis::Window> windows;
  nlohmann::json wdoc;
  if (args.windows) {
    wdoc = config::load_document(*args.windows);
    windows = parse_windows(wdoc, ctx.cfg);
  } else {
    const auto rc = config::resolve(runs.front().manifest.at("config"));
    const auto pumps = optics::resolve_pumps(rc.pumps, rc.crystal);
    windows.push_back(analysis::window_at("shared", analysis::hotspot_target(pumps, rc.crystal),
                                          ctx.cfg.analysis.window_lambda_nm, ctx.cfg.analysis.window_theta_deg));
  }

  fs::path target = ctx.out;
  std::string report_name = "report.json";
  if (ctx.out.extension() == ".json") {
    target = ctx.out.has_parent_path() ? ctx.out.parent_path() : fs::path(".");
    report_name = ctx.out.filename().string();
  }
  manifest::ArtifactDir dir(target);
  auto m = ctx.begin_manifest();
  nlohmann::json report;
  report["windows"] = nlohmann::json::array();
  for (const auto& w : windows) {
    report["windows"].push_back({{"name", w.name}, {"lambda_nm", w.lambda_center_nm}, {"theta_deg", w.theta_center_deg},
                                 {"lambda_width_nm", w.lambda_width_nm}, {"theta_width_deg", w.theta_width_deg}});
  }
  report["runs"] = nlohmann::json::array();
  std::vector<analysis::SweepPoint> points;
  for (const auto& r : runs) {
    const auto rep = analysis::extract_hotspots(r.map, windows);
    nlohmann::json jr{{"dir", r.dir.filename().string()}, {"beam_energy_uj", r.energy_uj}};
    for (const auto& b : rep.bands) {
      jr["bands"][b.name] = {{"counts", b.counts}, {"cells", b.cells}, {"peak", b.peak},
                             {"peak_lambda_nm", b.peak_lambda_nm}, {"peak_theta_deg", b.peak_theta_deg},
                             {"centroid_lambda_nm", b.centroid_lambda_nm}, {"centroid_theta_deg", b.centroid_theta_deg},
                             {"spot_lambda_nm", b.spot_lambda_nm}, {"spot_theta_deg", b.spot_theta_deg}};
    }
    if (rep.bands.size() >= 2) jr["peak_ratio"] = rep.ratio;
    report["runs"].push_back(jr);
    points.push_back({0.0, r.energy_uj, rep.bands, 0.0});
  }

  if (wdoc.contains("fit")) {
    const auto& f = wdoc["fit"];
    const auto band = f.at("band").get<std::string>();
    const auto ref = f.at("reference").get<std::string>();
    std::vector<analysis::SweepPoint> ref_points = points;
    if (f.contains("reference_maps")) {
      fs::path rp = f["reference_maps"].get<std::string>();
      if (rp.is_relative() && args.windows) rp = args.windows->parent_path() / rp;
      ref_points.clear();
      for (const auto& r : load_runs(rp)) {
        ref_points.push_back({0.0, r.energy_uj, analysis::extract_hotspots(r.map, windows).bands, 0.0});
      }
    }
    const auto fit = analysis::fit_gain_exponent(analysis::series_of(points, band), analysis::series_of(ref_points, ref),
                                                 ctx.cfg.analysis.confidence);
    report["fit"] = {{"band", band}, {"reference", ref}, {"exponent", fit.exponent}, {"ci", {fit.ci_low, fit.ci_high}},
                     {"confidence", ctx.cfg.analysis.confidence}, {"points", fit.used_points}, {"warnings", fit.warnings},
                     {"band_line", {{"slope", fit.band_line.slope}, {"intercept", fit.band_line.intercept}}},
                     {"reference_line", {{"slope", fit.reference_line.slope}, {"intercept", fit.reference_line.intercept}}}};
    CsvWriter w(dir.path("fit_lines.csv"), {"series", "sqrt_energy", "log_counts", "fit"});
    const auto emit = [&](const std::string& name, const std::vector<analysis::SweepPoint>& pts, const std::string& win,
                          const LineFit& line) {
      const auto s = analysis::series_of(pts, win);
      for (std::size_t i = 0; i < s.counts.size(); ++i) {
        const double x = std::sqrt(s.energy_uj[i]);
        w.cell(name).cell(x).cell(s.counts[i] > 0 ? std::log(s.counts[i]) : std::nan("")).cell(line.intercept + line.slope * x);
        w.end_row();
      }
    };
    emit(band, points, band, fit.band_line);
    emit("reference:" + ref, ref_points, ref, fit.reference_line);
    w.close();
    fmt::print("exponent {} vs {}: {:.4f} [{:.4f}, {:.4f}]\n", band, ref, fit.exponent, fit.ci_low, fit.ci_high);
    for (const auto& warn : fit.warnings) ctx.log("warning: " + warn);
    m.results["exponent"] = fit.exponent;
  }
  {
    std::ofstream out(dir.path(report_name));
    out << report.dump(2) << '\n';
  }
  dir.commit(m);
  return 0;
}

}  // namespace pdc::cli
