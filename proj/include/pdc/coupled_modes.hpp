#pragma once

#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

namespace pdc::cm {

// Mode layout:
//   2 modes: [s, i]                 edges s-i
//   3 modes: [s0, i1, i2]           edges s0-i1, s0-i2
//   4 modes: [s0, s0', c1, c2]      path c1 - s0 - s0' - c2
// Mode 0 is always the shared mode. In the 4-mode set s0' is the coupled mode
// that coincides with the second shared mode.
struct CouplingSpec {
  int modes = 2;
  double g_per_mm = 1.5;
  double length_mm = 4.0;
  std::vector<double> mismatch_per_mm;  // one per edge, empty means phase matched

  void validate() const;
  double glc() const { return g_per_mm * length_mm; }
};

std::vector<std::pair<int, int>> coupling_edges(int modes);

// Real symmetric coupling matrix G and per-mode phase rates phi with
// da/dz = -i phi a + G a^dagger.
Eigen::MatrixXd coupling_matrix(const CouplingSpec& spec);
Eigen::VectorXd mode_phases(const CouplingSpec& spec);

// Generator K of d/dz (a, a^dagger) = K (a, a^dagger), size 2n x 2n.
Eigen::MatrixXcd build_generator(const CouplingSpec& spec);

// Positive eigenvalues of G, descending: the parametric gains.
std::vector<double> gain_eigenvalues(const CouplingSpec& spec);

// a(L) = U a(0) + V a^dagger(0).
struct TransferMatrix {
  Eigen::MatrixXcd U;
  Eigen::MatrixXcd V;

  int size() const { return static_cast<int>(U.rows()); }
  static TransferMatrix identity(int n);
  // max of ||U U^H - V V^H - 1|| and ||U V^T - V U^T||, divided by
  // max(1, ||U||^2) so that it measures relative round-off at high gain.
  double symplectic_residual() const;
};

TransferMatrix propagate(const CouplingSpec& spec);
TransferMatrix propagate(const CouplingSpec& spec, double length_mm);

// Transfer matrices at z = k L / steps, k = 1..steps.
std::vector<TransferMatrix> propagate_trajectory(const CouplingSpec& spec, int steps);

// Apply `first`, then `second`.
TransferMatrix compose(const TransferMatrix& second, const TransferMatrix& first);

double transfer_distance(const TransferMatrix& a, const TransferMatrix& b);

struct PhotonStatistics {
  Eigen::VectorXd mean;        // <n_k>
  Eigen::MatrixXd covariance;  // <dn_k dn_l>
};

// Vacuum-input moments. Throws IntegrityError if T is not symplectic.
PhotonStatistics photon_statistics(const TransferMatrix& t, double tol = 1e-8);

struct ExponentFit {
  double value = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
  std::string warning;
};

// Slope of log n_shared versus gl_c for the given topology divided by the
// same slope for the two-mode squeezer.
ExponentFit gain_exponent(int modes, const std::vector<double>& glc_values,
                          double confidence = 0.95);

// Mean photon numbers of the shared mode and the coupled modes in the
// CSV convention (shared, c1, c2); c2 is NaN for two modes.
struct GainRow {
  double glc;
  double n_shared;
  double n_c1;
  double n_c2;
  double ratio;
};

GainRow gain_row(int modes, double glc, double length_mm = 4.0);

}  // namespace pdc::cm
