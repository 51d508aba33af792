#include "pdc/coupled_modes.hpp"

#include <algorithm>
#include <cmath>
#include <complex>
#include <limits>

#include <fmt/format.h>
#include <unsupported/Eigen/MatrixFunctions>

#include "pdc/errors.hpp"
#include "pdc/linfit.hpp"

namespace pdc::cm {

using cd = std::complex<double>;

void CouplingSpec::validate() const {
  if (modes < 2 || modes > 4) {
    throw ConfigError("/coupling/modes", fmt::format("unsupported mode count {}", modes));
  }
  if (!(g_per_mm >= 0.0) || !std::isfinite(g_per_mm)) {
    throw ConfigError("/coupling/g_per_mm", "coupling strength must be finite and >= 0");
  }
  if (!(length_mm > 0.0)) {
    throw ConfigError("/coupling/length_mm", "crystal length must be positive");
  }
  if (!mismatch_per_mm.empty() &&
      mismatch_per_mm.size() != coupling_edges(modes).size()) {
    throw ConfigError("/coupling/mismatch_per_mm",
                      fmt::format("expected {} entries, one per process",
                                  coupling_edges(modes).size()));
  }
}

std::vector<std::pair<int, int>> coupling_edges(int modes) {
  switch (modes) {
    case 2: return {{0, 1}};
    case 3: return {{0, 1}, {0, 2}};
    case 4: return {{0, 1}, {0, 2}, {1, 3}};
    default:
      throw ConfigError("/coupling/modes", fmt::format("unsupported mode count {}", modes));
  }
}

Eigen::MatrixXd coupling_matrix(const CouplingSpec& spec) {
  spec.validate();
  Eigen::MatrixXd g = Eigen::MatrixXd::Zero(spec.modes, spec.modes);
  for (auto [j, k] : coupling_edges(spec.modes)) {
    g(j, k) = spec.g_per_mm;
    g(k, j) = spec.g_per_mm;
  }
  return g;
}

Eigen::VectorXd mode_phases(const CouplingSpec& spec) {
  spec.validate();
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(spec.modes);
  if (spec.mismatch_per_mm.empty()) return phi;
  // Edges are listed parent first, so one pass solves phi_j + phi_k = D_jk.
  const auto edges = coupling_edges(spec.modes);
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const auto [j, k] = edges[e];
    phi(k) = spec.mismatch_per_mm[e] - phi(j);
  }
  return phi;
}

Eigen::MatrixXcd build_generator(const CouplingSpec& spec) {
  const int n = spec.modes;
  const Eigen::MatrixXd g = coupling_matrix(spec);
  const Eigen::VectorXd phi = mode_phases(spec);
  Eigen::MatrixXcd k = Eigen::MatrixXcd::Zero(2 * n, 2 * n);
  k.topRightCorner(n, n) = g.cast<cd>();
  k.bottomLeftCorner(n, n) = g.cast<cd>();
  for (int i = 0; i < n; ++i) {
    k(i, i) = cd(0.0, -phi(i));
    k(n + i, n + i) = cd(0.0, phi(i));
  }
  return k;
}

std::vector<double> gain_eigenvalues(const CouplingSpec& spec) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(coupling_matrix(spec));
  std::vector<double> out;
  const double eps = 1e-12 * std::max(1.0, spec.g_per_mm);
  for (int i = 0; i < es.eigenvalues().size(); ++i) {
    if (es.eigenvalues()(i) > eps) out.push_back(es.eigenvalues()(i));
  }
  std::sort(out.rbegin(), out.rend());
  return out;
}

TransferMatrix TransferMatrix::identity(int n) {
  return {Eigen::MatrixXcd::Identity(n, n), Eigen::MatrixXcd::Zero(n, n)};
}

double TransferMatrix::symplectic_residual() const {
  const int n = size();
  const Eigen::MatrixXcd id = Eigen::MatrixXcd::Identity(n, n);
  const double a = (U * U.adjoint() - V * V.adjoint() - id).cwiseAbs().maxCoeff();
  const Eigen::MatrixXcd m = U * V.transpose();
  const double b = (m - m.transpose()).cwiseAbs().maxCoeff();
  const double scale = std::max(1.0, U.cwiseAbs2().rowwise().sum().maxCoeff());
  return std::max(a, b) / scale;
}

TransferMatrix propagate(const CouplingSpec& spec, double length_mm) {
  const int n = spec.modes;
  const Eigen::MatrixXcd k = build_generator(spec) * length_mm;
  const Eigen::MatrixXcd e = k.exp();
  return {e.topLeftCorner(n, n), e.topRightCorner(n, n)};
}

TransferMatrix propagate(const CouplingSpec& spec) { return propagate(spec, spec.length_mm); }

TransferMatrix compose(const TransferMatrix& second, const TransferMatrix& first) {
  return {second.U * first.U + second.V * first.V.conjugate(),
          second.U * first.V + second.V * first.U.conjugate()};
}

std::vector<TransferMatrix> propagate_trajectory(const CouplingSpec& spec, int steps) {
  if (steps < 1) throw NumericError("propagate_trajectory: steps must be positive");
  const TransferMatrix step = propagate(spec, spec.length_mm / steps);
  std::vector<TransferMatrix> out;
  out.reserve(steps);
  TransferMatrix t = step;
  out.push_back(t);
  for (int i = 1; i < steps; ++i) {
    t = compose(step, t);
    out.push_back(t);
  }
  return out;
}

double transfer_distance(const TransferMatrix& a, const TransferMatrix& b) {
  const double du = (a.U - b.U).cwiseAbs().maxCoeff();
  const double dv = (a.V - b.V).cwiseAbs().maxCoeff();
  const double scale = std::max({1.0, a.U.cwiseAbs().maxCoeff(), b.U.cwiseAbs().maxCoeff()});
  return std::max(du, dv) / scale;
}

PhotonStatistics photon_statistics(const TransferMatrix& t, double tol) {
  const double res = t.symplectic_residual();
  if (!(res <= tol)) {
    throw IntegrityError(fmt::format("transfer matrix is not symplectic (residual {:.3e})", res));
  }
  const int n = t.size();
  const Eigen::MatrixXcd nn = t.V.conjugate() * t.V.transpose();
  const Eigen::MatrixXcd mm = t.U * t.V.transpose();
  PhotonStatistics s;
  s.mean = t.V.cwiseAbs2().rowwise().sum();
  s.covariance.resize(n, n);
  for (int k = 0; k < n; ++k) {
    for (int l = 0; l < n; ++l) {
      s.covariance(k, l) = std::norm(nn(k, l)) + std::norm(mm(k, l));
    }
    s.covariance(k, k) += s.mean(k);
  }
  return s;
}

GainRow gain_row(int modes, double glc, double length_mm) {
  CouplingSpec spec;
  spec.modes = modes;
  spec.length_mm = length_mm;
  spec.g_per_mm = glc / length_mm;
  const auto n = photon_statistics(propagate(spec), 1e-6).mean;
  GainRow row{glc, n(0), n(1), std::numeric_limits<double>::quiet_NaN(), 0.0};
  if (modes == 3) {
    row.n_c2 = n(2);
  } else if (modes == 4) {
    row.n_c1 = n(2);
    row.n_c2 = n(3);
  }
  row.ratio = row.n_c1 > 0.0 ? row.n_shared / row.n_c1 : std::numeric_limits<double>::quiet_NaN();
  return row;
}

ExponentFit gain_exponent(int modes, const std::vector<double>& glc_values, double confidence) {
  if (glc_values.size() < 2) throw NumericError("gain_exponent: need at least two gain values");
  std::vector<double> y_top, y_ref;
  for (double glc : glc_values) {
    y_top.push_back(std::log(gain_row(modes, glc).n_shared));
    y_ref.push_back(std::log(gain_row(2, glc).n_shared));
  }
  const auto top = fit_line(glc_values, y_top);
  const auto ref = fit_line(glc_values, y_ref);
  const auto r = slope_ratio(top, ref, confidence);
  ExponentFit out{r.value, r.ci_low, r.ci_high, {}};
  const double lo = *std::min_element(glc_values.begin(), glc_values.end());
  if (lo < 4.0) {
    out.warning = fmt::format(
        "sweep starts at gl_c = {:.2f}; below ~4 the exponent is biased by low-gain curvature", lo);
  }
  return out;
}

}  // namespace pdc::cm
