#include <cstdio>
#include <iostream>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "commands.hpp"
#include "pdc/errors.hpp"

namespace {

enum Exit { ok = 0, failure = 1, config_error = 2, numeric_error = 3 };

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Doubly pumped parametric down-conversion toolkit"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", PDC_VERSION_STRING);

  std::optional<std::string> config_path;
  std::string out = "out";
  std::optional<std::uint64_t> seed;
  std::optional<int> threads, shots;
  std::string format = "csv";
  bool quiet = false;
  app.add_option("--config", config_path, "JSON config merged over the shipped defaults");
  app.add_option("--out", out, "output directory")->capture_default_str();
  app.add_option("--seed", seed, "master seed");
  app.add_option("--threads", threads, "worker threads (0 = all cores)");
  app.add_option("--shots", shots, "stochastic shots per ensemble");
  app.add_option("--format", format, "map format")->check(CLI::IsMember({"csv", "bin"}))->capture_default_str();
  app.add_flag("-q,--quiet", quiet, "no progress on stderr");

  pdc::cli::BetaOption beta;
  int pump = 0;
  auto* pm = app.add_subcommand("pm-surface", "phase-matching surfaces of both pumps");
  pm->add_option("--beta", beta.beta_deg, "crystal rotation, degrees");
  pm->add_option("--pump", pump, "1, 2 or 0 for both")->check(CLI::Range(0, 2));

  auto* md = app.add_subcommand("modes", "shared and coupled mode loci");
  md->add_option("--beta", beta.beta_deg, "crystal rotation, degrees");

  auto* rs = app.add_subcommand("resonance", "rotation angles of the 3-to-4 mode transition");

  pdc::cli::GainArgs gain;
  auto* gn = app.add_subcommand("gain", "analytic coupled-mode photon numbers");
  gn->add_option("--modes", gain.modes)->check(CLI::IsMember({2, 3, 4}));
  gn->add_option("--glc", gain.glc, "single gain value");
  gn->add_option("--sweep", gain.sweep, "from:to:steps");

  pdc::cli::SimulateArgs sim;
  auto* sm = app.add_subcommand("simulate", "stochastic split-step ensemble");
  sm->add_option("--beta", sim.beta.beta_deg, "crystal rotation, degrees");
  sm->add_option("--glc", sim.glc, "gain; sets the per-beam energy");
  sm->add_flag("--single-pump", sim.single_pump, "switch the tilted pump off");

  pdc::cli::AnalyzeArgs an;
  auto* az = app.add_subcommand("analyze", "hot-spot windows and gain-exponent fits");
  az->add_option("--maps", an.maps, "simulate output, or a directory of them")->required();
  az->add_option("--windows", an.windows, "windows JSON");

  std::string figure;
  auto* rp = app.add_subcommand("reproduce", "figure recipes with pinned parameters");
  rp->add_option("figure", figure)->required()->check(CLI::IsMember({"fig2", "fig3", "fig4", "fig8", "fig10"}));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? ok : config_error;
  }

  try {
    pdc::cli::Context ctx;
    std::optional<std::filesystem::path> cfg_file;
    if (config_path) cfg_file = *config_path;
    ctx.cfg = pdc::config::load(cfg_file);
    if (seed) {
      ctx.cfg.seed = *seed;
      ctx.cfg.sim.seed = *seed;
      ctx.cfg.document["run"]["seed"] = *seed;
    }
    if (threads) {
      if (*threads < 0) throw pdc::ConfigError("/run/threads", "must be >= 0");
      ctx.cfg.threads = *threads;
      ctx.cfg.document["run"]["threads"] = *threads;
    }
    if (shots) {
      if (*shots < 1) throw pdc::ConfigError("/run/shots", "must be >= 1");
      ctx.cfg.shots = *shots;
      ctx.shots_explicit = true;
      ctx.cfg.document["run"]["shots"] = *shots;
    }
    ctx.out = out;
    ctx.format = format;
    ctx.quiet = quiet;
    for (int i = 1; i < argc; ++i) ctx.command += (i > 1 ? " " : "") + std::string(argv[i]);

    if (*pm) return pdc::cli::pm_surface(ctx, beta, pump);
    if (*md) return pdc::cli::modes(ctx, beta);
    if (*rs) return pdc::cli::resonance(ctx);
    if (*gn) return pdc::cli::gain(ctx, gain);
    if (*sm) return pdc::cli::simulate(ctx, sim);
    if (*az) return pdc::cli::analyze(ctx, an);
    if (*rp) return pdc::cli::reproduce(ctx, figure);
  } catch (const pdc::ConfigError& e) {
    if (e.pointer().empty()) {
      fmt::print(stderr, "config error{}\n", e.what());
    } else {
      fmt::print(stderr, "config error at {}\n", e.what());
    }
    return config_error;
  } catch (const pdc::Error& e) {
    fmt::print(stderr, "numeric failure: {}\n", e.what());
    return numeric_error;
  } catch (const std::exception& e) {
    fmt::print(stderr, "error: {}\n", e.what());
    return failure;
  }
  return failure;
}
