#include <sys/wait.h>
#include <unistd.h>

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include <doctest.h>
#include <fmt/format.h>

#include "pdc/config.hpp"
#include "pdc/errors.hpp"
#include "pdc/grid_io.hpp"
#include "pdc/manifest.hpp"

using namespace pdc;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / fmt::format("pdc_test_{}_{}", ::getpid(), counter()++);
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  static int& counter() {
    static int n = 0;
    return n;
  }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

struct Run {
  int status;
  std::string out;
};

Run cli(const std::string& args, const fs::path& cwd, const std::string& env = "") {
  const auto log = cwd / "stdout.txt";
  const auto cmd = fmt::format("cd '{}' && {} '{}' {} > '{}' 2>&1", cwd.string(), env, PDC_CLI_PATH, args,
                               log.string());
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, slurp(log)};
}

config::Json defaults() { return config::load_document(PDC_SOURCE_DIR "/data/defaults.json"); }

std::string pointer_of(const std::function<void()>& f) {
  try {
    f();
  } catch (const ConfigError& e) {
    return e.pointer();
  }
  return "<no error>";
}

}  // namespace

TEST_CASE("defaults resolve") {
  const auto c = config::resolve(defaults());
  CHECK(c.cut_auto);
  CHECK(rad_to_deg(c.crystal.cut_rad) == doctest::Approx(33.4366).epsilon(1e-5));
  CHECK(c.pumps.wavelength_nm == 352.0);
  CHECK(rad_to_deg(c.pumps.tilt_ext_rad[1]) == doctest::Approx(2.0));
  CHECK(c.sim.grid.nx == 512);
  CHECK(c.sim.grid.nt == 1024);
  CHECK(c.sim.grid.dx > 0.0);
  CHECK(c.shots == 50);
  CHECK(c.analysis.glc_sweep.size() == 4);
}

TEST_CASE("config errors carry JSON pointers") {
  auto bad = [](const std::string& ptr, const config::Json& v) {
    auto d = defaults();
    d[config::Json::json_pointer(ptr)] = v;
    return pointer_of([&] { config::resolve(d); });
  };
  CHECK(bad("/crystal/length_mm", -1.0) == "/crystal/length_mm");
  CHECK(bad("/sim/n_z", 0) == "/sim/n_z");
  CHECK(bad("/sim/fft", "fastest") == "/sim/fft");
  CHECK(bad("/crystal/cut_deg", "sideways") == "/crystal/cut_deg");
  CHECK(bad("/pumps/beams/1/energy_uj", -3.0) == "/pumps/beams/1/energy_uj");
  CHECK(bad("/sim/grid/dx", 50.0) == "/sim/grid/dx");
  CHECK(bad("/pumps/tilt_deg", config::Json::array({0.0})) == "/pumps/tilt_deg");
}

TEST_CASE("unknown keys are rejected") {
  auto d = defaults();
  config::Json overlay = {{"sim", {{"n_zz", 3}}}};
  CHECK(pointer_of([&] { config::check_known_keys(d, overlay); }) == "/sim/n_zz");
  config::Json ok = {{"pumps", {{"tilt_int_deg", {0.0, 1.2}}}}};
  CHECK_NOTHROW(config::check_known_keys(d, ok));
}

TEST_CASE("environment overrides") {
  auto d = defaults();
  config::apply_env_overrides(d, {"PDC_SIM__N_Z=150", "PDC_CRYSTAL__CUT_DEG=nominal", "HOME=/x",
                                  "PDC_DEFAULTS=/ignored", "PDC_RUN__SHOTS=7"});
  CHECK(d["sim"]["n_z"] == 150);
  CHECK(d["crystal"]["cut_deg"] == "nominal");
  CHECK(d["run"]["shots"] == 7);
  const auto c = config::resolve(d);
  CHECK(c.sim.n_z == 150);
  CHECK(rad_to_deg(c.crystal.cut_rad) == doctest::Approx(33.48));
  CHECK(pointer_of([&] { config::apply_env_overrides(d, {"PDC_SIM__BOGUS=1"}); }) == "/sim/bogus");
}

TEST_CASE("load merges a user file over the defaults") {
  TempDir t;
  const auto f = t.path / "user.json";
  std::ofstream(f) << R"({"crystal": {"rotation_deg": 7.0}, "pumps": {"tilt_int_deg": [0, 1.2]}})";
  const auto c = config::load(f, {});
  CHECK(rad_to_deg(c.crystal.rotation_rad) == doctest::Approx(7.0));
  // Internal tilts are converted back to external angles.
  const auto p = optics::resolve_pumps(c.pumps, c.crystal);
  CHECK(rad_to_deg(p.tilt_rad[1]) == doctest::Approx(1.2).epsilon(1e-9));
  std::ofstream(t.path / "both.json") << R"({"pumps": {"tilt_int_deg": [0, 1.2], "tilt_deg": [0, 2]}})";
  CHECK(pointer_of([&] { config::load(t.path / "both.json", {}); }) == "/pumps/tilt_int_deg");
  CHECK_THROWS_AS(config::load(t.path / "missing.json", {}), ConfigError);
  std::ofstream(t.path / "broken.json") << "{ not json";
  CHECK_THROWS_AS(config::load(t.path / "broken.json", {}), ConfigError);
}

TEST_CASE("grid round trip") {
  TempDir t;
  std::vector<double> data(6);
  for (std::size_t i = 0; i < data.size(); ++i) data[i] = std::sqrt(2.0) * (static_cast<double>(i) - 2.5);
  io::write_grid(t.path / "g", data, {2, 3}, {{"a", "nm", {1.0, 2.0}}, {"b", "rad", {0.1, 0.2, 0.3}}},
                 {{"note", "x"}});
  const auto g = io::read_grid(t.path / "g");
  CHECK(g.data == data);
  CHECK(g.shape == std::vector<std::size_t>{2, 3});
  CHECK(g.sidecar["byte_order"] == "little");
  CHECK(g.sidecar["dtype"] == "float64");
  CHECK(g.sidecar["axes"][1]["unit"] == "rad");
  CHECK(g.sidecar["note"] == "x");
  CHECK(fs::file_size(t.path / "g.bin") == 48);
  CHECK_THROWS_AS(io::write_grid(t.path / "h", data, {4, 2}, {}), IntegrityError);
  CHECK_THROWS_AS(io::write_grid(t.path / "h", data, {2, 3}, {{"a", "", {1.0}}, {"b", "", {1, 2, 3}}}),
                  IntegrityError);
  fs::resize_file(t.path / "g.bin", 40);
  CHECK_THROWS_AS(io::read_grid(t.path / "g"), IntegrityError);
}

TEST_CASE("CSV writer") {
  TempDir t;
  {
    io::CsvWriter w(t.path / "a.csv", {"x", "name"});
    w.cell(0.1).cell(std::string("p"));
    w.end_row();
    w.cell(std::nan("")).cell(3);
    w.end_row();
    w.cell(1.0);
    CHECK_THROWS(w.end_row());
  }
  CHECK(slurp(t.path / "a.csv").rfind("x,name\n0.1,p\nnan,3\n", 0) == 0);
  CHECK(io::format_number(1.0 / 3.0) == "0.333333333333");
}

TEST_CASE("sha256") {
  CHECK(manifest::sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("artifact directory commits atomically and rolls back") {
  TempDir t;
  const auto target = t.path / "run";
  {
    manifest::ArtifactDir d(target);
    std::ofstream(d.path("x.csv")) << "a\n1\n";
  }
  CHECK(!fs::exists(target));
  for (const auto& e : fs::directory_iterator(t.path)) CHECK(e.path().filename().string().find("staging") == std::string::npos);
  {
    manifest::ArtifactDir d(target);
    std::ofstream(d.path("x.csv")) << "a\n1\n";
    auto m = manifest::begin("test", {{"k", 1}}, 42);
    d.commit(m);
    CHECK(m.outputs.size() == 1);
    CHECK(m.outputs[0].sha256 == manifest::sha256_hex("a\n1\n"));
  }
  REQUIRE(fs::exists(target / "manifest.json"));
  const auto j = config::Json::parse(slurp(target / "manifest.json"));
  CHECK(j["seed"] == 42);
  CHECK(j["config"]["k"] == 1);
  CHECK(j["config_sha256"].get<std::string>().size() == 64);
  CHECK(j["modules"].contains("splitstep-sim"));
  CHECK(!j["version"].get<std::string>().empty());
  {
    manifest::ArtifactDir d(target);
    std::ofstream(d.path("y.csv")) << "b\n";
    auto m = manifest::begin("test2", {}, 1);
    d.commit(m);
  }
  CHECK(!fs::exists(target / "x.csv"));
  CHECK(fs::exists(target / "y.csv"));
}

TEST_CASE("cli: missing config fails without artifacts") {
  TempDir t;
  const auto r = cli("--config nope.json --out out resonance", t.path);
  CHECK(r.status == 2);
  CHECK(!fs::exists(t.path / "out"));
  const auto u = cli("--out out2 modes --beta 3", t.path, "PDC_SIM__NOPE=1");
  CHECK(u.status == 2);
  CHECK(!fs::exists(t.path / "out2"));
  CHECK(cli("--out out3 frobnicate", t.path).status != 0);
}

TEST_CASE("cli: resonance prints both angles") {
  TempDir t;
  const auto r = cli("--out out resonance", t.path);
  REQUIRE(r.status == 0);
  CHECK(r.out.find("7.1") != std::string::npos);
  CHECK(r.out.find("-8.9") != std::string::npos);
  CHECK(fs::exists(t.path / "out" / "resonance.csv"));
  CHECK(fs::exists(t.path / "out" / "manifest.json"));
}

TEST_CASE("cli: reproduce fig4 writes three mode-locus files") {
  TempDir t;
  REQUIRE(cli("--out out reproduce fig4", t.path).status == 0);
  for (const char* b : {"+0.00", "+4.00", "+7.00"}) {
    CHECK(fs::exists(t.path / "out" / "fig4" / fmt::format("fig4_modes_beta{}.csv", b)));
  }
}

TEST_CASE("cli: identical manifests give byte-identical CSV outputs") {
  TempDir t;
  REQUIRE(cli("--out a modes --beta 4", t.path).status == 0);
  REQUIRE(cli("--out b modes --beta 4", t.path).status == 0);
  CHECK(slurp(t.path / "a" / "modes.csv") == slurp(t.path / "b" / "modes.csv"));
  auto ja = config::Json::parse(slurp(t.path / "a" / "manifest.json"));
  auto jb = config::Json::parse(slurp(t.path / "b" / "manifest.json"));
  CHECK(ja["config_sha256"] == jb["config_sha256"]);
  CHECK(ja["outputs"] == jb["outputs"]);
  CHECK(ja["config"]["crystal"]["rotation_deg"] == 4.0);
}

TEST_CASE("cli: simulate and analyze on a reduced grid") {
  TempDir t;
  const std::string env = "PDC_SIM__GRID__NX=384 PDC_SIM__GRID__NT=256 PDC_SIM__N_Z=20 "
                          "PDC_PUMPS__BEAMS='[{\"waist_um\":297,\"duration_fs\":0,\"energy_uj\":35},"
                          "{\"waist_um\":297,\"duration_fs\":0,\"energy_uj\":35}]'";
  const auto r = cli("--out s --shots 2 --threads 1 -q simulate --beta 0", t.path, env);
  REQUIRE_MESSAGE(r.status == 0, r.out);
  for (const char* f : {"angular_spectrum.bin", "angular_spectrum.json", "angular_spectrum.csv", "far_field.bin",
                        "far_field.json", "lambda_marginal.csv", "section_shared.csv", "manifest.json"}) {
    CHECK_MESSAGE(fs::exists(t.path / "s" / f), f);
  }
  const auto a = cli("--out report.json analyze --maps s", t.path);
  REQUIRE_MESSAGE(a.status == 0, a.out);
  const auto rep = config::Json::parse(slurp(t.path / "report.json"));
  CHECK(rep["runs"].size() == 1);
  CHECK(rep["runs"][0]["bands"]["shared"]["counts"].get<double>() > 0.0);
}
