#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "pdc/config.hpp"
#include "pdc/grid_io.hpp"
#include "pdc/manifest.hpp"

namespace pdc::cli {

struct Context {
  config::RunConfig cfg;
  std::filesystem::path out;
  std::string format = "csv";
  std::string command;
  bool quiet = false;
  bool shots_explicit = false;  // --shots given on the command line

  void log(const std::string& msg) const;
  // Starts a manifest for this command with the resolved configuration.
  manifest::RunManifest begin_manifest() const;
  manifest::RunManifest begin_manifest(const config::RunConfig& c) const;
};

struct BetaOption {
  std::optional<double> beta_deg;
};

int pm_surface(const Context& ctx, const BetaOption& beta, int pump);
int modes(const Context& ctx, const BetaOption& beta);
int resonance(const Context& ctx);

struct GainArgs {
  std::optional<int> modes;
  std::optional<double> glc;
  std::optional<std::string> sweep;  // from:to:steps
};
int gain(const Context& ctx, const GainArgs& args);

struct SimulateArgs {
  BetaOption beta;
  std::optional<double> glc;        // per-beam energy follows E_ref (g / g_ref)^2
  bool single_pump = false;
};
int simulate(const Context& ctx, const SimulateArgs& args);

struct AnalyzeArgs {
  std::filesystem::path maps;
  std::optional<std::filesystem::path> windows;
};
int analyze(const Context& ctx, const AnalyzeArgs& args);

int reproduce(const Context& ctx, const std::string& figure);

// Shared writers.
void write_points_csv(const std::filesystem::path& path, const std::vector<pm::SurfacePoint>& pts);
std::string beta_tag(double beta_deg);
// Binary grid always; with --format csv also a long-form CSV.
void write_map(const Context& ctx, const manifest::ArtifactDir& dir, const std::string& stem,
               const SpectralMap& map, const nlohmann::json& extra);

}  // namespace pdc::cli
