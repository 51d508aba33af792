#include <algorithm>
#include <cmath>

#include <doctest.h>

#include "pdc/errors.hpp"
#include "pdc/phasematch.hpp"
#include "pdc/rootfind.hpp"

using namespace pdc;
using namespace pdc::pm;

namespace {

CrystalConfig auto_cut(double beta_deg = 0.0) {
  CrystalConfig c;
  c.cut_rad = optics::phase_matched_cut(c.dispersion, 352.0);
  c.rotation_rad = deg_to_rad(beta_deg);
  return c;
}

optics::ExternalPumps external(double tilt2_deg = 2.0) {
  optics::ExternalPumps e;
  e.wavelength_nm = 352.0;
  e.tilt_ext_rad = {0.0, deg_to_rad(tilt2_deg)};
  return e;
}

PumpPair pumps_at(const CrystalConfig& c, double tilt2_deg = 2.0) {
  return optics::resolve_pumps(external(tilt2_deg), c);
}

}  // namespace

TEST_CASE("collinear degenerate point is phase matched at the solved cut") {
  const auto c = auto_cut();
  const auto p = pumps_at(c);
  CHECK(std::abs(mismatch_D(1, {0.0, 0.0, 0.0}, p, c)) < 1e-9);
}

TEST_CASE("D1 is symmetric under (q, W) -> (-q, -W) for an untilted pump") {
  const auto c = auto_cut(3.0);
  const auto p = pumps_at(c);
  for (double qx : {-0.3, 0.0, 0.11}) {
    for (double qy : {0.0, 0.07}) {
      for (double w : {-0.15, 0.02, 0.2}) {
        const double a = mismatch_D(1, {qx, qy, w}, p, c);
        const double b = mismatch_D(1, {-qx, -qy, -w}, p, c);
        CHECK(std::abs(a - b) < 1e-12);
      }
    }
  }
}

TEST_CASE("coincident pumps have identical mismatch") {
  const auto c = auto_cut(7.0);
  PumpPair p;
  p.tilt_rad = {deg_to_rad(0.4), deg_to_rad(0.4)};
  const Mismatch mm(p, c);
  for (double qx : {-0.2, 0.05}) {
    for (double w : {-0.1, 0.1}) {
      CHECK(mm(1, {qx, 0.01, w}) == mm(2, {qx, 0.01, w}));
    }
  }
  CHECK_THROWS_AS(pump_rate(p, c), DomainError);
}

TEST_CASE("evanescent legs are reported") {
  const auto c = auto_cut();
  const auto p = pumps_at(c);
  const Mismatch mm(p, c);
  CHECK_THROWS_AS(mm(1, {50.0, 0.0, 0.0}), EvanescentError);
  CHECK(std::isnan(mm.or_nan(1, {50.0, 0.0, 0.0})));
}

TEST_CASE("pump 1 section passes through the degenerate collinear point") {
  const auto c = auto_cut();
  const auto p = pumps_at(c);
  SurfaceGrid g;
  const auto tr = trace_pm_section(1, g, 1e-9, p, c);
  REQUIRE(!tr.points.empty());
  const double dtheta = (g.theta_x_max_deg - g.theta_x_min_deg) / (g.n_theta_x - 1);
  const double dl = (g.band.max_nm - g.band.min_nm) / (g.n_lambda - 1);
  const bool hit = std::any_of(tr.points.begin(), tr.points.end(), [&](const SurfacePoint& s) {
    return std::abs(s.theta_x_ext_deg) <= dtheta && std::abs(s.lambda_nm - 704.0) <= dl;
  });
  CHECK(hit);
  for (const auto& s : tr.points) CHECK(std::abs(s.d1) <= 1e-9);
}

TEST_CASE("pump 2 section is noncollinear-degenerate at +7 and nondegenerate at -8.8") {
  {
    const auto c = auto_cut(7.0);
    const auto x = section_crossings(2, 704.0, deg_to_rad(-4.0), deg_to_rad(4.0), 801, pumps_at(c), c);
    REQUIRE(x.size() >= 2);
    CHECK(std::abs(x.front() - x.back()) > deg_to_rad(0.05));
  }
  {
    const auto c = auto_cut(-8.8);
    const auto x = section_crossings(2, 704.0, deg_to_rad(-4.0), deg_to_rad(4.0), 801, pumps_at(c), c);
    CHECK(x.empty());
  }
}

TEST_CASE("surface trace points satisfy the mismatch tolerance") {
  const auto c = auto_cut(7.0);
  const auto p = pumps_at(c);
  SurfaceGrid g;
  g.theta_y_min_deg = -2.0;
  g.theta_y_max_deg = 2.0;
  g.n_theta_y = 9;
  g.n_theta_x = 41;
  g.n_lambda = 121;
  for (int j = 1; j <= 2; ++j) {
    const auto tr = trace_pm_surface(j, g, 1e-9, p, c);
    REQUIRE(!tr.points.empty());
    for (const auto& s : tr.points) {
      CHECK(s.branch == j);
      CHECK(std::abs(j == 1 ? s.d1 : s.d2) <= 1e-9);
    }
  }
}

TEST_CASE("pump rate: secant and finite-difference oracles") {
  const auto c = auto_cut(4.0);
  const auto p = pumps_at(c);
  const auto w1 = optics::pump_wavevector(1, p, c);
  const auto w2 = optics::pump_wavevector(2, p, c);
  const double r = pump_rate(p, c);
  CHECK(r == doctest::Approx((w2.k - w1.k) / (w2.q - w1.q)).epsilon(1e-12));
  // Local derivative dk/dQ at the mid tilt from two nearby tilts.
  const double tm = 0.5 * (p.tilt_rad[0] + p.tilt_rad[1]);
  const double h = 1e-5;
  PumpPair a = p, b = p;
  a.tilt_rad[1] = tm - h;
  b.tilt_rad[1] = tm + h;
  const auto wa = optics::pump_wavevector(2, a, c);
  const auto wb = optics::pump_wavevector(2, b, c);
  const double fd = (wb.k - wa.k) / (wb.q - wa.q);
  CHECK(r == doctest::Approx(fd).epsilon(0.02));
}

TEST_CASE("pump rate vanishes where the pump wave numbers coincide") {
  auto dk = [](double beta) {
    const auto c = auto_cut(rad_to_deg(beta));
    const auto p = pumps_at(c);
    return optics::pump_wavevector(2, p, c).k - optics::pump_wavevector(1, p, c).k;
  };
  const auto b0 = bisect(dk, deg_to_rad(-12.0), deg_to_rad(12.0), 1e-14);
  REQUIRE(b0);
  const auto c = auto_cut(rad_to_deg(*b0));
  CHECK(std::abs(pump_rate(pumps_at(c), c)) < 1e-9);
}

TEST_CASE("resonance angles and the rate condition") {
  const auto c = auto_cut();
  const auto res = find_resonance(external(), c, deg_to_rad(-12.0), deg_to_rad(12.0), deg_to_rad(0.25));
  REQUIRE(res.roots.size() == 2);
  const auto& plus = res.roots[0];
  const auto& minus = res.roots[1];
  CHECK(plus.branch == ResonanceBranch::collinear_noncollinear);
  CHECK(minus.branch == ResonanceBranch::collinear_nondegenerate);
  CHECK(std::abs(rad_to_deg(plus.beta_rad) - 7.0) <= 0.2);
  CHECK(std::abs(rad_to_deg(minus.beta_rad) + 8.8) <= 0.2);
  // Residual bounded by its slope times the beta tolerance of the solver.
  auto residual = [&](double beta) {
    auto cb = c;
    cb.rotation_rad = beta;
    const auto pb = pumps_at(cb);
    return pump_rate(pb, cb) + 0.5 * (pb.tilt_rad[1] - pb.tilt_rad[0]);
  };
  const double h = deg_to_rad(1e-3);
  const double slope = (residual(plus.beta_rad + h) - residual(plus.beta_rad - h)) / (2.0 * h);
  CHECK(std::abs(residual(plus.beta_rad)) <= std::abs(slope) * deg_to_rad(1e-4));
  CHECK_THROWS_AS(find_resonance(external(), c, 0.1, 0.0, 0.01), DomainError);
}

TEST_CASE("resonance matches brute-force coalescence of mode loci") {
  const auto c = auto_cut();
  const auto res = find_resonance(external(), c, deg_to_rad(-12.0), deg_to_rad(12.0), deg_to_rad(0.25));
  REQUIRE(res.roots.size() == 2);
  for (const auto& root : res.roots) {
    const double centre = rad_to_deg(root.beta_rad);
    double best_beta = 0.0, best_gap = 1e9;
    for (double b = centre - 1.0; b <= centre + 1.0; b += 0.01) {
      const auto cb = auto_cut(b);
      const auto fam = sample_mode_family(pumps_at(cb), cb, {600.0, 850.0}, 101);
      const double gap = std::min(fam.max_gap01, fam.max_gap02);
      if (gap < best_gap) {
        best_gap = gap;
        best_beta = b;
      }
    }
    CHECK(std::abs(best_beta - centre) <= 0.1);
  }
}

TEST_CASE("mode family tags") {
  const auto c0 = auto_cut(0.0);
  CHECK(sample_mode_family(pumps_at(c0), c0).tag == FamilyTag::triplet);
  const auto res = find_resonance(external(), c0, deg_to_rad(-12.0), deg_to_rad(12.0), deg_to_rad(0.25));
  REQUIRE(!res.roots.empty());
  auto cs = c0;
  cs.rotation_rad = res.roots[0].beta_rad;
  const auto fam = sample_mode_family(pumps_at(cs), cs);
  CHECK(fam.tag == FamilyTag::quadruplet);
  CHECK(std::min(fam.max_gap01, fam.max_gap02) < deg_to_rad(0.05));
}

TEST_CASE("shared-mode hot spots") {
  struct Case {
    double beta, signal, idler;
  };
  for (const auto& k : {Case{0.0, 673.0, 738.0}, Case{7.0, 704.0, 704.0}, Case{-8.8, 641.0, 781.0}}) {
    const auto c = auto_cut(k.beta);
    const auto h = shared_hotspots(pumps_at(c), c);
    CHECK(std::abs(h.signal_nm - k.signal) <= 3.0);
    CHECK(std::abs(h.idler_nm - k.idler) <= 3.0);
    for (const auto& r : h.roots) {
      const auto m = mode_from_external(r.theta_x_ext, 0.0, r.lambda_nm, 352.0);
      const Mismatch mm(pumps_at(c), c);
      CHECK(std::abs(mm(1, m)) < 1e-8);
      CHECK(std::abs(mm(2, m)) < 1e-8);
    }
  }
}

TEST_CASE("no shared mode outside the band") {
  const auto c = auto_cut(0.0);
  CHECK_THROWS_AS(shared_hotspots(pumps_at(c), c, {800.0, 850.0}), NotFoundError);
}

TEST_CASE("shared mode: first-order locus close to the exact root") {
  const auto c = auto_cut(0.0);
  const auto p = pumps_at(c);
  for (double lambda : {650.0, 704.0, 760.0}) {
    const auto s = shared_mode_position(optics::signal_omega(lambda, 352.0), p, c);
    REQUIRE(s.theta_x_exact);
    CHECK(std::abs(*s.theta_x_exact - s.theta_x_int) < deg_to_rad(0.02));
  }
}

TEST_CASE("coupled bands are separated by twice the pump tilt at degeneracy") {
  const auto c = auto_cut(0.0);
  const auto p = pumps_at(c);
  const auto m = coupled_mode_positions(0.0, p, c);
  const double sep_int = std::abs(m.theta1_int - m.theta2_int);
  CHECK(sep_int == doctest::Approx(2.0 * std::abs(p.tilt_rad[1] - p.tilt_rad[0])).epsilon(0.02));
  CHECK(std::abs(m.theta1_ext - m.theta2_ext) == doctest::Approx(deg_to_rad(4.0)).epsilon(0.02));
}

TEST_CASE("coupled bands merge as the pumps coincide") {
  const auto c = auto_cut(0.0);
  PumpPair p;
  p.tilt_rad = {0.0, 1e-9};
  const auto m = coupled_mode_positions(0.02, p, c);
  CHECK(std::abs(m.theta1_int - m.theta2_int) < 1e-8);
}

TEST_CASE("coupled bands mirror about the pump midline when the rate vanishes") {
  auto dk = [](double beta) {
    const auto c = auto_cut(rad_to_deg(beta));
    const auto p = pumps_at(c);
    return optics::pump_wavevector(2, p, c).k - optics::pump_wavevector(1, p, c).k;
  };
  const auto b0 = bisect(dk, deg_to_rad(-12.0), deg_to_rad(12.0), 1e-14);
  REQUIRE(b0);
  const auto c = auto_cut(rad_to_deg(*b0));
  const auto p = pumps_at(c);
  const double mid = 0.5 * (p.tilt_rad[0] + p.tilt_rad[1]);
  for (double w : {0.05, 0.1, 0.2}) {
    const auto a = coupled_mode_positions(w, p, c);
    const auto b = coupled_mode_positions(-w, p, c);
    // Same frequency: exact mirror pair.
    CHECK(std::abs((a.theta1_int - mid) + (a.theta2_int - mid)) < 1e-9);
    // theta_1(W) and theta_2(-W): mirror up to the k_s(W) / k_s(-W) dispersion.
    const double ks_p = optics::signal_k(w, c, 352.0);
    const double ks_m = optics::signal_k(-w, c, 352.0);
    const double expect = (a.theta1_int - mid) * (1.0 - ks_p / ks_m);
    CHECK(std::abs((a.theta1_int - mid) + (b.theta2_int - mid) - expect) < 1e-9);
  }
}
