#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

namespace pdc::manifest {

std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

struct OutputDigest {
  std::string file;  // relative to the artifact directory
  std::uintmax_t bytes = 0;
  std::string sha256;
};

struct RunManifest {
  std::string command;             // subcommand and its arguments
  nlohmann::json config;           // full resolved document
  std::string config_sha256;
  std::uint64_t seed = 0;
  std::string version;
  nlohmann::json modules;          // module name -> version
  std::string started_utc;
  double wall_seconds = 0.0;
  std::vector<OutputDigest> outputs;
  nlohmann::json results = nlohmann::json::object();  // small scalar summaries

  nlohmann::json to_json() const;
};

RunManifest begin(const std::string& command, const nlohmann::json& config, std::uint64_t seed);

// Files are written into a hidden staging directory next to the target and
// moved into place by commit(). Without commit the staging area is removed,
// so a failed run leaves no partial artifacts.
class ArtifactDir {
 public:
  explicit ArtifactDir(std::filesystem::path target);
  ~ArtifactDir();
  ArtifactDir(const ArtifactDir&) = delete;
  ArtifactDir& operator=(const ArtifactDir&) = delete;

  std::filesystem::path path(const std::string& name) const { return staging_ / name; }
  const std::filesystem::path& target() const { return target_; }

  // Digests every staged file into the manifest, writes manifest.json and
  // moves everything into the target directory.
  void commit(RunManifest& m);

 private:
  std::filesystem::path target_;
  std::filesystem::path staging_;
  bool committed_ = false;
};

}  // namespace pdc::manifest
