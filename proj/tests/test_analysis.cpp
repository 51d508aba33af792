#include <cmath>

#include <doctest.h>

#include "pdc/analysis.hpp"
#include "pdc/errors.hpp"
#include "pdc/gain_sweep.hpp"
#include "pdc/phasematch.hpp"

using namespace pdc;
using namespace pdc::analysis;

namespace {

SpectralMap uniform_map(double value = 1.0) {
  SpectralMap m;
  for (int r = 0; r < 200; ++r) m.lambda_nm.push_back(650.0 + 0.5 * r);
  for (int c = -300; c <= 300; ++c) m.qx.push_back(c * 0.001);
  m.data.assign(m.rows() * m.cols(), value);
  return m;
}

EnergySeries series(const std::string& name, double rate, double scale = 1.0) {
  EnergySeries s;
  s.band = name;
  for (double e : {10.0, 16.0, 25.0, 36.0, 49.0}) {
    s.energy_uj.push_back(e);
    s.counts.push_back(scale * std::exp(rate * std::sqrt(e)));
  }
  return s;
}

}  // namespace

TEST_CASE("weighted line fit") {
  const std::vector<double> x{0.0, 1.0, 2.0, 3.0};
  const std::vector<double> y{1.0, 3.0, 5.0, 7.0};
  const auto f = fit_line(x, y);
  CHECK(f.slope == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.intercept == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(f.slope_se < 1e-12);
  CHECK(f.dof == 2);
  const std::vector<double> yn{1.1, 2.9, 5.2, 6.8};
  const std::vector<double> w{1.0, 1.0, 1.0, 1.0};
  const auto a = fit_line(x, yn);
  const auto b = fit_line(x, yn, w);
  CHECK(a.slope == doctest::Approx(b.slope).epsilon(1e-14));
  CHECK(a.slope_se > 0.0);
  CHECK_THROWS_AS(fit_line(std::vector<double>{1.0}, std::vector<double>{1.0}), NumericError);
}

TEST_CASE("Student-t quantiles") {
  CHECK(t_quantile(2, 0.95) == doctest::Approx(4.302652729911275).epsilon(1e-10));
  CHECK(t_quantile(10, 0.95) == doctest::Approx(2.228138851986274).epsilon(1e-10));
}

TEST_CASE("gain exponent of synthetic exponentials") {
  const auto f = fit_gain_exponent(series("band", std::sqrt(2.0) * 0.9, 3.0), series("ref", 0.9));
  CHECK(f.exponent == doctest::Approx(std::sqrt(2.0)).epsilon(1e-12));
  CHECK(f.used_points == 5);
  CHECK(f.ci_low <= f.exponent);
  CHECK(f.ci_high >= f.exponent);
}

TEST_CASE("band fitted against itself gives exactly one") {
  auto s = series("band", 0.7);
  s.counts[2] *= 1.3;  // not a perfect line
  const auto f = fit_gain_exponent(s, s);
  CHECK(f.exponent == 1.0);
}

TEST_CASE("exponent is invariant under count and energy scaling") {
  auto band = series("band", 1.1);
  auto ref = series("ref", 0.8);
  band.counts[1] *= 1.2;
  ref.counts[3] *= 0.9;
  const double base = fit_gain_exponent(band, ref).exponent;
  auto b2 = band, r2 = ref;
  for (auto& c : b2.counts) c *= 17.0;
  for (auto& c : r2.counts) c *= 0.01;
  CHECK(fit_gain_exponent(b2, r2).exponent == doctest::Approx(base).epsilon(1e-12));
  auto b3 = band, r3 = ref;
  for (auto& e : b3.energy_uj) e *= 4.0;
  for (auto& e : r3.energy_uj) e *= 4.0;
  CHECK(fit_gain_exponent(b3, r3).exponent == doctest::Approx(base).epsilon(1e-12));
}

TEST_CASE("non-positive counts are dropped with a warning") {
  auto band = series("band", 1.0);
  band.counts[0] = 0.0;
  const auto f = fit_gain_exponent(band, series("ref", 1.0));
  CHECK(f.used_points == 4);
  CHECK(!f.warnings.empty());
  band.counts[1] = -1.0;
  band.counts[2] = 0.0;
  CHECK_THROWS_AS(fit_gain_exponent(band, series("ref", 1.0)), NumericError);
}

TEST_CASE("uniform map: window counts scale with area") {
  const auto m = uniform_map(2.0);
  Window a{"a", 700.0, 4.0, 0.0, 0.4};
  Window b{"b", 720.0, 8.0, 0.0, 0.4};
  const auto rep = extract_hotspots(m, {a, b});
  CHECK(rep.band("a").counts == doctest::Approx(2.0 * rep.band("a").cells));
  const double ratio = rep.band("b").counts / rep.band("a").counts;
  CHECK(ratio == doctest::Approx(2.0).epsilon(0.15));
  CHECK(rep.band("a").counts >= 0.0);
  CHECK_THROWS_AS(rep.band("c"), DomainError);
}

TEST_CASE("window validation") {
  const auto m = uniform_map();
  CHECK_THROWS_AS(extract_hotspots(m, {{"a", 700.0, 4.0, 0.0, 0.4}, {"b", 702.0, 4.0, 0.1, 0.4}}), DomainError);
  CHECK_THROWS_AS(extract_hotspots(m, {{"a", 651.0, 4.0, 0.0, 0.4}}), DomainError);
  CHECK_THROWS_AS(extract_hotspots(m, {{"a", 700.0, 4.0, 5.0, 0.4}}), DomainError);
  CHECK_THROWS_AS(extract_hotspots(m, {{"a", 700.0, 0.0, 0.0, 0.4}}), DomainError);
  CHECK_THROWS_AS(extract_hotspots(SpectralMap{}, {{"a", 700.0, 4.0, 0.0, 0.4}}), DomainError);
}

TEST_CASE("peak and centroid of a single bright cell") {
  auto m = uniform_map(0.0);
  const std::size_t r = 100, c = 320;
  m.at(r, c) = 5.0;
  const double th = rad_to_deg(m.theta_x_ext(r, c));
  const auto rep = extract_hotspots(m, {{"a", m.lambda_nm[r], 3.0, th, 0.3}});
  const auto& b = rep.band("a");
  CHECK(b.peak == 5.0);
  CHECK(b.centroid_lambda_nm == doctest::Approx(m.lambda_nm[r]));
  CHECK(b.centroid_theta_deg == doctest::Approx(th));
}

TEST_CASE("hot-spot target away from and at resonance") {
  optics::CrystalConfig c;
  c.cut_rad = optics::phase_matched_cut(c.dispersion, 352.0);
  optics::ExternalPumps e;
  e.tilt_ext_rad = {0.0, deg_to_rad(2.0)};
  const auto t0 = hotspot_target(optics::resolve_pumps(e, c), c);
  CHECK(!t0.coalesced);
  CHECK(std::abs(t0.lambda_nm - 673.0) < 3.0);

  const auto res = pm::find_resonance(e, c, deg_to_rad(-12.0), deg_to_rad(12.0), deg_to_rad(0.25));
  REQUIRE(!res.roots.empty());
  c.rotation_rad = res.roots[0].beta_rad;
  const auto ts = hotspot_target(optics::resolve_pumps(e, c), c);
  CHECK(std::abs(ts.lambda_nm - 704.0) < 1.0);
  CHECK(std::abs(ts.theta_x_ext_deg) < 0.2);

  const auto w = window_at("s", ts, 5.0, 0.2);
  CHECK(w.lambda_center_nm == ts.lambda_nm);
  CHECK(w.theta_width_deg == 0.2);
}

TEST_CASE("series extraction from sweep points") {
  std::vector<SweepPoint> pts;
  for (double e : {10.0, 20.0}) {
    SweepPoint p;
    p.energy_uj = e;
    p.windows.push_back({"a", e * 2.0});
    p.windows.push_back({"b", e * 3.0});
    pts.push_back(p);
  }
  const auto s = series_of(pts, "b");
  CHECK(s.band == "b");
  CHECK(s.counts == std::vector<double>{30.0, 60.0});
  CHECK(s.energy_uj == std::vector<double>{10.0, 20.0});
  CHECK_THROWS(series_of(pts, "zz"));
}
