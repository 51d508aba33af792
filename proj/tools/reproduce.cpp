#include <cmath>

#include <fmt/format.h>

#include "commands.hpp"
#include "pdc/errors.hpp"
#include "pdc/gain_sweep.hpp"
#include "pdc/phasematch.hpp"

namespace pdc::cli {

namespace {

using io::CsvWriter;

void fig2(const Context& ctx, const manifest::ArtifactDir& dir, manifest::RunManifest& m) {
  for (const double beta : {7.0, -8.8}) {
    auto c = ctx.cfg.with_rotation(deg_to_rad(beta));
    const auto pumps = optics::resolve_pumps(c.pumps, c.crystal);
    auto grid = c.surface;
    grid.theta_x_min_deg = -4.0;
    grid.theta_x_max_deg = 4.0;
    grid.n_theta_x = 81;
    grid.theta_y_min_deg = -4.0;
    grid.theta_y_max_deg = 4.0;
    grid.n_theta_y = 81;
    grid.n_lambda = 151;
    std::vector<pm::SurfacePoint> surf, sect;
    for (int j = 1; j <= 2; ++j) {
      const auto s = pm::trace_pm_surface(j, grid, c.pm_tolerance, pumps, c.crystal);
      surf.insert(surf.end(), s.points.begin(), s.points.end());
      const auto x = pm::trace_pm_section(j, c.surface, c.pm_tolerance, pumps, c.crystal);
      sect.insert(sect.end(), x.points.begin(), x.points.end());
    }
    write_points_csv(dir.path(fmt::format("fig2_surface_{}.csv", beta_tag(beta))), surf);
    write_points_csv(dir.path(fmt::format("fig2_section_{}.csv", beta_tag(beta))), sect);
    m.results[beta_tag(beta)] = {{"surface_points", surf.size()}, {"section_points", sect.size()}};
    ctx.log(fmt::format("fig2 beta {:+.1f}: {} surface, {} section points", beta, surf.size(), sect.size()));
  }
}

void fig3(const Context& ctx, const manifest::ArtifactDir& dir, manifest::RunManifest& m, int shots) {
  // Reduced 3+1D grid with continuous-wave pumps; the transverse plane is
  // what the figure shows.
  for (const double beta : {0.0, 7.0}) {
    auto c = ctx.cfg.with_rotation(deg_to_rad(beta));
    auto cfg = c.sim;
    for (auto& b : cfg.pumps.beams) b.duration_fs = 0.0;
    cfg.grid = sim::default_grid(cfg.pumps.wavelength_nm, cfg.band, cfg.max_angle_deg, cfg.guard, 384, 32, 384);
    cfg.validate();
    const auto pumps = optics::resolve_pumps(cfg.pumps, cfg.crystal);
    const auto t = analysis::hotspot_target(pumps, cfg.crystal);
    const double conj = 1.0 / (1.0 / pumps.wavelength_nm - 1.0 / t.lambda_nm);
    sim::Propagator prop(cfg);
    sim::EnsembleOptions opts;
    opts.shots = shots;
    opts.threads = ctx.cfg.worker_count();
    opts.batch = 1;
    const auto r = sim::run_ensemble(prop, opts);
    const auto& g = r.grid;
    std::vector<double> qx(g.nx), qy(g.ny);
    for (int i = 0; i < g.nx; ++i) qx[i] = g.qx(i);
    for (int j = 0; j < g.ny; ++j) qy[j] = g.qy(j);
    const std::pair<const char*, double> bands[] = {{"signal", t.lambda_nm}, {"idler", conj}};
    for (const auto& [name, lambda] : bands) {
      // Half-width of one frequency bin around the wavelength, at least 2 nm.
      const double dw = 2.0 * kPi / (g.nt * g.dt);
      const double dl = std::max(2.0, 0.5 * lambda * lambda * dw / (2.0 * kPi * kSpeedOfLight * 1000.0));
      const auto far = sim::far_field(r.mean_intensity, g, {lambda - dl, lambda + dl}, cfg.pumps.wavelength_nm);
      io::write_grid(dir.path(fmt::format("fig3_{}_{}", beta_tag(beta), name)), far,
                     {static_cast<std::size_t>(g.ny), static_cast<std::size_t>(g.nx)},
                     {{"q_y", "rad/um", qy}, {"q_x", "rad/um", qx}},
                     {{"band_nm", {lambda - dl, lambda + dl}}, {"shots", shots}, {"order", "DFT"}});
    }
    m.results[beta_tag(beta)] = {{"signal_nm", t.lambda_nm}, {"idler_nm", conj}, {"shots", shots}};
    ctx.log(fmt::format("fig3 beta {:+.1f}: {:.1f} s", beta, r.seconds));
  }
}

void fig4(const Context& ctx, const manifest::ArtifactDir& dir, manifest::RunManifest& m) {
  for (const double beta : {0.0, 4.0, 7.0}) {
    const auto c = ctx.cfg.with_rotation(deg_to_rad(beta));
    const auto pumps = optics::resolve_pumps(c.pumps, c.crystal);
    const pm::Mismatch mm(pumps, c.crystal);
    const auto fam = pm::sample_mode_family(pumps, c.crystal, c.surface.band, c.surface.n_lambda);
    CsvWriter w(dir.path(fmt::format("fig4_modes_{}.csv", beta_tag(beta))),
                {"lambda_nm", "theta_x_ext_deg", "theta_y_ext_deg", "branch", "D1", "D2"});
    for (std::size_t i = 0; i < fam.lambda_nm.size(); ++i) {
      const double l = fam.lambda_nm[i];
      const std::pair<const char*, double> rows[] = {
          {"shared", fam.theta0_ext[i]}, {"coupled1", fam.theta1_ext[i]}, {"coupled2", fam.theta2_ext[i]}};
      for (const auto& [name, th] : rows) {
        const auto mode = pm::mode_from_external(th, 0.0, l, pumps.wavelength_nm);
        w.cell(l).cell(rad_to_deg(th)).cell(0.0).cell(std::string(name)).cell(mm.or_nan(1, mode)).cell(mm.or_nan(2, mode));
        w.end_row();
      }
    }
    w.close();
    m.results[beta_tag(beta)] = {{"family", fam.tag == pm::FamilyTag::quadruplet ? "quadruplet" : "triplet"},
                                 {"max_gap01_deg", rad_to_deg(fam.max_gap01)},
                                 {"max_gap02_deg", rad_to_deg(fam.max_gap02)}};
  }
}

void fig8(const Context& ctx, const manifest::ArtifactDir& dir, manifest::RunManifest& m) {
  for (const double beta : {0.0, 7.0, -8.8}) {
    auto c = ctx.cfg.with_rotation(deg_to_rad(beta));
    auto cfg = c.sim;
    const auto pumps = optics::resolve_pumps(cfg.pumps, cfg.crystal);
    sim::Propagator prop(cfg);
    sim::EnsembleOptions opts;
    opts.shots = ctx.cfg.shots;
    opts.threads = ctx.cfg.worker_count();
    opts.batch = ctx.cfg.batch;
    const auto r = sim::run_ensemble(prop, opts);
    const auto map = sim::angular_spectrum(r.mean_intensity, r.grid, cfg.pumps.wavelength_nm, c.analysis.slit_deg);
    const auto stem = fmt::format("fig8_{}_map", beta_tag(beta));
    write_map(ctx, dir, stem, map, {{"shots", r.shots}});
    std::vector<pm::SurfacePoint> curves;
    for (int j = 1; j <= 2; ++j) {
      const auto x = pm::trace_pm_section(j, c.surface, c.pm_tolerance, pumps, c.crystal);
      curves.insert(curves.end(), x.points.begin(), x.points.end());
    }
    write_points_csv(dir.path(fmt::format("fig8_{}_pm_curves.csv", beta_tag(beta))), curves);
    m.results[beta_tag(beta)] = {{"shots", r.shots}, {"seconds", r.seconds}};
    ctx.log(fmt::format("fig8 beta {:+.1f}: {} shots in {:.1f} s", beta, r.shots, r.seconds));
  }
}

void fig10(const Context& ctx, const manifest::ArtifactDir& dir, manifest::RunManifest& m) {
  const auto& c = ctx.cfg;
  const auto res = pm::find_resonance(c.pumps, c.crystal, deg_to_rad(c.resonance.beta_min_deg),
                                      deg_to_rad(c.resonance.beta_max_deg), deg_to_rad(c.resonance.step_deg),
                                      deg_to_rad(c.resonance.tolerance_deg));
  std::optional<double> beta_star;
  for (const auto& r : res.roots) {
    if (r.branch == pm::ResonanceBranch::collinear_noncollinear) beta_star = r.beta_rad;
  }
  if (!beta_star) throw NotFoundError("no collinear-noncollinear resonance in the scan range", 0.0);

  analysis::SweepSettings s;
  s.glc = c.analysis.glc_sweep;
  s.shots = c.shots;
  s.threads = c.worker_count();
  s.batch = c.batch;
  s.slit_deg = c.analysis.slit_deg;
  s.log = [&](const std::string& msg) { ctx.log(msg); };

  const auto target_at = [&](double beta) {
    const auto rc = c.with_rotation(beta);
    return analysis::hotspot_target(optics::resolve_pumps(rc.pumps, rc.crystal), rc.crystal);
  };
  const auto t0 = target_at(0.0);
  const auto ts = target_at(*beta_star);
  const auto w0 = analysis::window_at("shared_beta0", t0, c.analysis.window_lambda_nm, c.analysis.window_theta_deg);
  const auto ws = analysis::window_at("shared_resonance", ts, c.analysis.window_lambda_nm, c.analysis.window_theta_deg);

  const auto base0 = c.with_rotation(0.0).sim;
  const auto baseS = c.with_rotation(*beta_star).sim;
  ctx.log("two pumps, beta 0");
  const auto p0 = analysis::run_sweep(base0, false, {w0}, s);
  ctx.log(fmt::format("two pumps, beta {:.3f}", rad_to_deg(*beta_star)));
  const auto pS = analysis::run_sweep(baseS, false, {ws}, s);
  ctx.log("pump 1 only, beta 0");
  const auto pR = analysis::run_sweep(base0, true, {w0, ws}, s);

  CsvWriter sw(dir.path("fig10_series.csv"), {"series", "window", "glc", "energy_uj", "sqrt_energy", "counts", "log_counts"});
  const auto emit = [&](const std::string& name, const std::vector<analysis::SweepPoint>& pts) {
    for (const auto& p : pts) {
      for (const auto& w : p.windows) {
        sw.cell(name).cell(w.name).cell(p.glc).cell(p.energy_uj).cell(std::sqrt(p.energy_uj)).cell(w.counts)
            .cell(w.counts > 0 ? std::log(w.counts) : std::nan(""));
        sw.end_row();
      }
    }
  };
  emit("two_pumps_beta0", p0);
  emit("two_pumps_resonance", pS);
  emit("pump1_only_beta0", pR);
  sw.close();

  CsvWriter fw(dir.path("fig10_fits.csv"), {"case", "beta_deg", "exponent", "ci_low", "ci_high", "band_slope", "reference_slope", "theory"});
  const auto fit_case = [&](const std::string& name, double beta, const std::vector<analysis::SweepPoint>& band,
                            const std::string& win, double theory) {
    const auto f = analysis::fit_gain_exponent(analysis::series_of(band, win), analysis::series_of(pR, win),
                                               c.analysis.confidence);
    fw.cell(name).cell(rad_to_deg(beta)).cell(f.exponent).cell(f.ci_low).cell(f.ci_high)
        .cell(f.band_line.slope).cell(f.reference_line.slope).cell(theory);
    fw.end_row();
    m.results[name] = {{"exponent", f.exponent}, {"ci", {f.ci_low, f.ci_high}}, {"warnings", f.warnings}};
    fmt::print("{}: exponent {:.4f} [{:.4f}, {:.4f}] (plane-wave theory {:.4f})\n", name, f.exponent, f.ci_low,
               f.ci_high, theory);
  };
  fit_case("three_mode", 0.0, p0, w0.name, std::sqrt(2.0));
  fit_case("four_mode", *beta_star, pS, ws.name, kGoldenRatio);
  fw.close();
}

}  // namespace

int reproduce(const Context& ctx, const std::string& figure) {
  manifest::ArtifactDir dir(ctx.out / figure);
  auto m = ctx.begin_manifest();
  if (figure == "fig2") {
    fig2(ctx, dir, m);
  } else if (figure == "fig3") {
    fig3(ctx, dir, m, ctx.shots_explicit ? ctx.cfg.shots : 1);
  } else if (figure == "fig4") {
    fig4(ctx, dir, m);
  } else if (figure == "fig8") {
    fig8(ctx, dir, m);
  } else if (figure == "fig10") {
    fig10(ctx, dir, m);
  } else {
    throw ConfigError("/figure", fmt::format("unknown figure '{}'", figure));
  }
  dir.commit(m);
  ctx.log(fmt::format("wrote {}", (ctx.out / figure).string()));
  return 0;
}

}  // namespace pdc::cli
