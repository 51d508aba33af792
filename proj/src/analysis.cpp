#include "pdc/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <fmt/format.h>

#include "pdc/errors.hpp"

namespace pdc::analysis {

const WindowCounts& HotspotReport::band(const std::string& name) const {
  for (const auto& b : bands) {
    if (b.name == name) return b;
  }
  throw DomainError(fmt::format("no window named '{}'", name));
}

namespace {

bool overlaps(const Window& a, const Window& b) {
  return a.lambda_min() < b.lambda_max() && b.lambda_min() < a.lambda_max() &&
         a.theta_min() < b.theta_max() && b.theta_min() < a.theta_max();
}

}  // namespace

HotspotReport extract_hotspots(const SpectralMap& map, const std::vector<Window>& windows) {
  if (map.rows() == 0 || map.cols() == 0) throw DomainError("empty spectral map");
  const double lmin = map.lambda_nm.front();
  const double lmax = map.lambda_nm.back();
  for (std::size_t i = 0; i < windows.size(); ++i) {
    const auto& w = windows[i];
    if (!(w.lambda_width_nm > 0.0) || !(w.theta_width_deg > 0.0)) {
      throw DomainError(fmt::format("window '{}' has non-positive size", w.name));
    }
    if (w.lambda_min() < lmin || w.lambda_max() > lmax) {
      throw DomainError(fmt::format(
          "window '{}' spans {:.2f}-{:.2f} nm but the map covers {:.2f}-{:.2f} nm", w.name,
          w.lambda_min(), w.lambda_max(), lmin, lmax));
    }
    for (const double l : {w.lambda_min(), w.lambda_max()}) {
      const double k0 = k0_of_nm(l);
      const double tmin = rad_to_deg(std::asin(std::max(-1.0, map.qx.front() / k0)));
      const double tmax = rad_to_deg(std::asin(std::min(1.0, map.qx.back() / k0)));
      if (w.theta_min() < tmin || w.theta_max() > tmax) {
        throw DomainError(fmt::format(
            "window '{}' spans {:.3f} to {:.3f} deg but the map covers {:.3f} to {:.3f} deg at {:.1f} nm",
            w.name, w.theta_min(), w.theta_max(), tmin, tmax, l));
      }
    }
    for (std::size_t j = 0; j < i; ++j) {
      if (overlaps(w, windows[j])) {
        throw DomainError(fmt::format("windows '{}' and '{}' overlap", windows[j].name, w.name));
      }
    }
  }

  HotspotReport rep;
  rep.windows = windows;
  for (const auto& w : windows) {
    WindowCounts c;
    c.name = w.name;
    c.peak = -std::numeric_limits<double>::infinity();
    double wsum = 0.0, wl = 0.0, wt = 0.0;
    const auto r0 = std::lower_bound(map.lambda_nm.begin(), map.lambda_nm.end(), w.lambda_min()) -
                    map.lambda_nm.begin();
    for (std::size_t r = static_cast<std::size_t>(r0); r < map.rows() && map.lambda_nm[r] <= w.lambda_max(); ++r) {
      for (std::size_t col = 0; col < map.cols(); ++col) {
        const double th = rad_to_deg(map.theta_x_ext(r, col));
        if (!(th >= w.theta_min() && th <= w.theta_max())) continue;
        const double v = map.at(r, col);
        c.counts += v;
        ++c.cells;
        if (v > c.peak) {
          c.peak = v;
          c.peak_lambda_nm = map.lambda_nm[r];
          c.peak_theta_deg = th;
        }
        if (v > 0.0) {
          wsum += v;
          wl += v * map.lambda_nm[r];
          wt += v * th;
        }
      }
    }
    if (c.cells == 0) {
      throw DomainError(fmt::format("window '{}' contains no grid cell", w.name));
    }
    if (wsum > 0.0) {
      c.centroid_lambda_nm = wl / wsum;
      c.centroid_theta_deg = wt / wsum;
    }
    if (c.peak > 0.0) {
      double hs = 0.0, hl = 0.0, ht = 0.0;
      for (std::size_t r = static_cast<std::size_t>(r0); r < map.rows() && map.lambda_nm[r] <= w.lambda_max(); ++r) {
        for (std::size_t col = 0; col < map.cols(); ++col) {
          const double th = rad_to_deg(map.theta_x_ext(r, col));
          if (!(th >= w.theta_min() && th <= w.theta_max())) continue;
          const double v = map.at(r, col);
          if (v < 0.5 * c.peak) continue;
          hs += v;
          hl += v * map.lambda_nm[r];
          ht += v * th;
        }
      }
      c.spot_lambda_nm = hl / hs;
      c.spot_theta_deg = ht / hs;
    }
    rep.bands.push_back(c);
  }
  if (rep.bands.size() >= 2 && rep.bands[1].peak > 0.0) {
    rep.ratio = rep.bands[0].peak / rep.bands[1].peak;
  }
  if (rep.bands.size() >= 2 && rep.bands[1].counts > 0.0) {
    rep.count_ratio = rep.bands[0].counts / rep.bands[1].counts;
  }
  return rep;
}

namespace {

struct Prepared {
  std::vector<double> x, y, w;
};

Prepared prepare(const EnergySeries& s, std::vector<std::string>& warnings) {
  if (s.energy_uj.size() != s.counts.size() ||
      (!s.counts_sigma.empty() && s.counts_sigma.size() != s.counts.size())) {
    throw NumericError(fmt::format("series '{}' has mismatched lengths", s.band));
  }
  Prepared p;
  for (std::size_t i = 0; i < s.counts.size(); ++i) {
    if (!(s.counts[i] > 0.0) || !(s.energy_uj[i] > 0.0)) {
      warnings.push_back(fmt::format("{}: dropped point E = {} uJ with counts {}", s.band,
                                     s.energy_uj[i], s.counts[i]));
      continue;
    }
    p.x.push_back(std::sqrt(s.energy_uj[i]));
    p.y.push_back(std::log(s.counts[i]));
    double w = 1.0;
    if (!s.counts_sigma.empty() && s.counts_sigma[i] > 0.0) {
      const double rel = s.counts_sigma[i] / s.counts[i];
      w = 1.0 / (rel * rel);
    }
    p.w.push_back(w);
  }
  if (p.x.size() < 3) {
    throw NumericError(fmt::format("series '{}' has {} usable points; at least 3 are needed",
                                   s.band, p.x.size()));
  }
  return p;
}

}  // namespace

GainFit fit_gain_exponent(const EnergySeries& band, const EnergySeries& ref, double confidence) {
  GainFit out;
  out.band = band.band;
  out.reference = ref.band;
  const auto pb = prepare(band, out.warnings);
  const auto pr = prepare(ref, out.warnings);
  for (const auto* p : {&pb, &pr}) {
    const auto [lo, hi] = std::minmax_element(p->x.begin(), p->x.end());
    if (p->x.size() < 4) {
      out.warnings.push_back(fmt::format("only {} energy points; 4 or more recommended", p->x.size()));
    }
    if (*hi < 2.0 * *lo) {
      out.warnings.push_back(fmt::format(
          "sqrt(E) spans {:.2f}x; a 2x span or more is recommended for a stable slope", *hi / *lo));
    }
  }
  out.band_line = fit_line(pb.x, pb.y, pb.w);
  out.reference_line = fit_line(pr.x, pr.y, pr.w);
  const auto r = slope_ratio(out.band_line, out.reference_line, confidence);
  out.exponent = r.value;
  out.ci_low = r.ci_low;
  out.ci_high = r.ci_high;
  out.used_points = static_cast<int>(pb.x.size());
  return out;
}

}  // namespace pdc::analysis
