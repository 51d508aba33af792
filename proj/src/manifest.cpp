#include "pdc/manifest.hpp"

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iterator>

#include <fmt/format.h>
#include <openssl/evp.h>
#include <unistd.h>

#include "pdc/errors.hpp"

namespace pdc::manifest {

namespace fs = std::filesystem;

namespace {

class Digest {
 public:
  Digest() : ctx_(EVP_MD_CTX_new()) {
    if (!ctx_ || EVP_DigestInit_ex(ctx_, EVP_sha256(), nullptr) != 1) throw Error("sha256 init failed");
  }
  ~Digest() { EVP_MD_CTX_free(ctx_); }
  void update(const char* p, std::size_t n) { EVP_DigestUpdate(ctx_, p, n); }
  std::string hex() {
    unsigned char md[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    EVP_DigestFinal_ex(ctx_, md, &len);
    std::string out;
    for (unsigned int i = 0; i < len; ++i) out += fmt::format("{:02x}", md[i]);
    return out;
  }

 private:
  EVP_MD_CTX* ctx_;
};

std::string utc_now() {
  const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  Digest d;
  d.update(bytes.data(), bytes.size());
  return d.hex();
}

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(fmt::format("cannot read '{}'", path.string()));
  Digest d;
  char buf[1 << 16];
  while (in) {
    in.read(buf, sizeof buf);
    d.update(buf, static_cast<std::size_t>(in.gcount()));
  }
  return d.hex();
}

nlohmann::json RunManifest::to_json() const {
  nlohmann::json j;
  j["command"] = command;
  j["version"] = version;
  j["modules"] = modules;
  j["seed"] = seed;
  j["config_sha256"] = config_sha256;
  j["config"] = config;
  j["started_utc"] = started_utc;
  j["wall_seconds"] = wall_seconds;
  j["results"] = results;
  j["outputs"] = nlohmann::json::array();
  for (const auto& o : outputs) j["outputs"].push_back({{"file", o.file}, {"bytes", o.bytes}, {"sha256", o.sha256}});
  return j;
}

RunManifest begin(const std::string& command, const nlohmann::json& config, std::uint64_t seed) {
  RunManifest m;
  m.command = command;
  m.config = config;
  m.config_sha256 = sha256_hex(config.dump());
  m.seed = seed;
  m.version = PDC_VERSION_STRING;
  for (const char* mod : {"optics-core", "phasematch", "coupled-modes", "splitstep-sim", "analysis", "cli"}) {
    m.modules[mod] = PDC_VERSION;
  }
  m.started_utc = utc_now();
  return m;
}

ArtifactDir::ArtifactDir(fs::path target) : target_(std::move(target)) {
  const auto parent = target_.has_parent_path() ? target_.parent_path() : fs::path(".");
  fs::create_directories(parent);
  const auto name = target_.filename().empty() ? target_.parent_path().filename() : target_.filename();
  staging_ = parent / fmt::format(".{}.staging-{}", name.string(), ::getpid());
  fs::remove_all(staging_);
  fs::create_directories(staging_);
}

ArtifactDir::~ArtifactDir() {
  if (!committed_) {
    std::error_code ec;
    fs::remove_all(staging_, ec);
  }
}

void ArtifactDir::commit(RunManifest& m) {
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(staging_)) {
    if (e.is_regular_file()) files.push_back(e.path());
  }
  std::sort(files.begin(), files.end());
  m.outputs.clear();
  for (const auto& f : files) {
    m.outputs.push_back({f.filename().string(), fs::file_size(f), sha256_file(f)});
  }
  {
    std::ofstream out(staging_ / "manifest.json");
    out << m.to_json().dump(2) << '\n';
    if (!out) throw Error("cannot write manifest.json");
  }
  fs::create_directories(target_);
  // Outputs of an earlier job in the same directory would no longer match the manifest.
  if (const auto prev = target_ / "manifest.json"; fs::exists(prev)) {
    std::ifstream in(prev);
    const auto old = nlohmann::json::parse(in, nullptr, false);
    if (!old.is_discarded() && old.contains("outputs")) {
      for (const auto& o : old["outputs"]) {
        std::error_code ec;
        if (o.contains("file")) fs::remove(target_ / o["file"].get<std::string>(), ec);
      }
    }
  }
  for (const auto& e : fs::directory_iterator(staging_)) {
    fs::rename(e.path(), target_ / e.path().filename());
  }
  fs::remove_all(staging_);
  committed_ = true;
}

}  // namespace pdc::manifest
