#pragma once

#include <optional>
#include <string>
#include <vector>

#include "pdc/linfit.hpp"
#include "pdc/spectral_map.hpp"

namespace pdc::analysis {

// Rectangle in (wavelength, external theta_x).
struct Window {
  std::string name;
  double lambda_center_nm = 0.0;
  double lambda_width_nm = 5.0;
  double theta_center_deg = 0.0;
  double theta_width_deg = 0.3;

  double lambda_min() const { return lambda_center_nm - 0.5 * lambda_width_nm; }
  double lambda_max() const { return lambda_center_nm + 0.5 * lambda_width_nm; }
  double theta_min() const { return theta_center_deg - 0.5 * theta_width_deg; }
  double theta_max() const { return theta_center_deg + 0.5 * theta_width_deg; }
};

struct WindowCounts {
  std::string name;
  double counts = 0.0;     // sum over cells
  std::size_t cells = 0;
  double peak = 0.0;
  double peak_lambda_nm = 0.0;
  double peak_theta_deg = 0.0;
  double centroid_lambda_nm = 0.0;  // intensity-weighted, negative cells ignored
  double centroid_theta_deg = 0.0;
  // Centroid of the cells at or above half the window peak: the spot itself.
  double spot_lambda_nm = 0.0;
  double spot_theta_deg = 0.0;
};

struct HotspotReport {
  std::vector<Window> windows;
  std::vector<WindowCounts> bands;
  double ratio = 0.0;  // first window peak / second window peak, when both exist
  double count_ratio = 0.0;

  const WindowCounts& band(const std::string& name) const;
};

// Integrates each window over the map. Throws DomainError if a window is
// clipped by the map edge or two windows overlap.
HotspotReport extract_hotspots(const SpectralMap& map, const std::vector<Window>& windows);

struct EnergySeries {
  std::string band;
  std::vector<double> energy_uj;
  std::vector<double> counts;
  std::vector<double> counts_sigma;  // optional, standard error of each mean
};

struct GainFit {
  std::string band;
  std::string reference;
  double exponent = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  LineFit band_line;       // log(counts) = intercept + slope * sqrt(E)
  LineFit reference_line;
  int used_points = 0;
  std::vector<std::string> warnings;
};

// Linear fits of log(counts) against sqrt(E_p); exponent is the slope ratio
// band / reference. Non-positive counts are dropped with a warning; fewer
// than three usable points throws NumericError.
GainFit fit_gain_exponent(const EnergySeries& band, const EnergySeries& reference,
                          double confidence = 0.95);

}  // namespace pdc::analysis
