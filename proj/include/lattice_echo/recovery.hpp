#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lattice_echo/expsum.hpp"
#include "lattice_echo/lattice.hpp"
#include "lattice_echo/realization.hpp"

namespace lattice_echo {

// Dual-lattice recovery from a single realization: threshold the scanned
// exponential-sum field, refine the surviving peaks, extract a dual basis,
// then verify every candidate dual point at a larger radius and estimate
// the offset and noise dispersion from the verified peaks.

struct ThresholdPeak {
  Eigen::VectorXd lambda;
  std::complex<double> value;
};

// Grid nodes with Re(value) > beta, merged into connected clusters
// (adjacent nodes along any axis); one representative per cluster, the
// node of maximal real part. Deterministic: ties break on grid order.
std::vector<ThresholdPeak> threshold_set(const ExpSumField& field, double beta);

struct RefinedPeak {
  Eigen::VectorXd lambda;
  std::complex<double> value;
  bool refined = true;  // false when the start had no local structure
};

// Coordinate ascent with three-point parabolic interpolation on
// |exp_sum(R, .)|, starting from lambda0 with initial step `step`, until
// the step drops below tol. Returns lambda0 tagged unrefined when no
// ascent direction exists at the start.
RefinedPeak refine_peak(const WindowView& win, const Eigen::VectorXd& lambda0,
                        double tol, double step);
RefinedPeak refine_peak(const Realization& r, double R,
                        const Eigen::VectorXd& lambda0, double tol = 1e-4,
                        double step = 0);

// Builds a dual basis from detected peak locations: greedily picks the
// shortest linearly independent peaks, requires every remaining peak to be
// an integer combination within `coverage_tol`, then reduces the basis.
// Peaks closer to the origin than `origin_tol` are ignored.
Eigen::MatrixXd extract_dual_basis(const std::vector<Eigen::VectorXd>& peaks,
                                   int dim, double coverage_tol = 0.02,
                                   double origin_tol = 1e-3);

// Solves arg(value(m)) = -2*pi*<m, c> (mod 2*pi) for the offset c, first
// from the d dual generators, then by wrapped-phase weighted least squares
// over all peaks. Returns the representative of c in the primal
// fundamental cell. With fold_negative_phi, phases are folded modulo pi to
// tolerate characteristic functions of either sign.
Eigen::VectorXd estimate_offset(const std::vector<ThresholdPeak>& peaks,
                                const LatticeSpec& dual, double beta,
                                bool fold_negative_phi = false);

// Weighted least-squares slope of -log|value| against pi^2 |lambda|^2
// (inverse-variance weights |value|^2); the gaussian dispersion a.
double estimate_dispersion(const std::vector<ThresholdPeak>& peaks);

// |value| residuals against the fitted gaussian model, peak for peak.
std::vector<double> dispersion_residuals(const std::vector<ThresholdPeak>& peaks,
                                         double a);

struct RecoveryParams {
  double R_detect = 60;
  double R_verify = 250;
  double box_lo = -2.5;
  double box_hi = 2.5;
  double spacing = 0;        // 0: 1/(3*R_detect), one node per main lobe
  double beta = 0.007;
  double beta_detect = 0.05;
  double target_radius = 0;  // 0: min(|box_lo|, |box_hi|)
  double refine_tol = 1e-4;
};

struct VerifiedPeak {
  Eigen::VectorXd lambda;
  std::complex<double> value;
  double radius = 0;
};

struct RecoveryReport {
  int dim = 0;
  Eigen::MatrixXd dual_basis;
  Eigen::MatrixXd primal_basis;
  Eigen::VectorXd offset;
  std::optional<double> dispersion;
  std::vector<double> residuals;  // per nonzero peak, |value| vs model
  bool dispersion_misfit = false;
  double beta = 0;
  double R_detect = 0;
  double R_verify = 0;
  std::vector<VerifiedPeak> peaks;  // verified peaks incl. the origin
  int verified_count = 0;
  bool cloaked = false;
  std::uint64_t seed = 0;
};

RecoveryReport recover_lattice(const Realization& r, const RecoveryParams& params);

// JSON with exactly these fields: dim, dual_basis, primal_basis, offset,
// dispersion, beta, R_detect, R_verify, peaks[{lambda, re, im, radius}],
// verified_count, cloaked, seed.
std::string report_to_json(const RecoveryReport& report);

}  // namespace lattice_echo
