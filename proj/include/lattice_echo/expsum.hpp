#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <string>
#include <utility>
#include <vector>

#include "lattice_echo/lattice.hpp"
#include "lattice_echo/realization.hpp"

namespace lattice_echo {

// Evaluations of the random exponential sum
//   M_R(lambda) = covolume / vol(B_R) * sum_{w in W, |w|<=R} conj(e(<w,lambda>))
// under the conjugated-exponential convention e(t) = exp(2*pi*i*t). The
// covolume factor keeps the limit at phi_xi(lambda) on the dual lattice for
// any lattice normalization. Accumulation is pairwise (blocks of 1024 terms
// merged in a fixed binary tree), so results are bit-identical for any
// worker count.

inline constexpr int kSumBlock = 1024;

// A window of the realization prepared for repeated evaluation.
struct WindowView {
  const Realization* realization = nullptr;
  double R = 0;
  std::vector<std::int64_t> idx;  // entries with |w| <= R, entry order
  double norm_divisor = 0;        // vol(B_R) / covolume
};

WindowView make_window_view(const Realization& r, double R);

std::complex<double> exp_sum(const WindowView& w, const Eigen::VectorXd& lambda);
std::complex<double> exp_sum(const Realization& r, double R,
                             const Eigen::VectorXd& lambda);

// A regular frequency grid: node (i_0,...,i_{d-1}) sits at
// origin + spacing * i, flattened row-major with the last axis fastest.
struct GridSpec {
  Eigen::VectorXd origin;
  double spacing = 0;
  std::vector<int> counts;

  int dim() const { return static_cast<int>(counts.size()); }
  std::int64_t num_nodes() const;
  Eigen::VectorXd node(std::int64_t flat) const;
};

// Builds the symmetric grid covering [lo, hi]^d with the given spacing.
GridSpec make_box_grid(int dim, double lo, double hi, double spacing);

struct ExpSumField {
  double R = 0;
  GridSpec grid;
  std::vector<std::complex<double>> values;  // aligned with grid order
  double norm_divisor = 0;                   // vol(B_R) / covolume
  std::string lattice_ref;
  std::string noise_ref;
  std::uint64_t seed = 0;
};

inline constexpr std::int64_t kDefaultNodeCap = 20'000'000;

// M_R at every grid node. Identical (within 1e-12) to pointwise exp_sum;
// per-axis phase rotations are computed once per point and applied by an
// exact recurrence over nodes (resynchronized every 64 steps).
ExpSumField exp_sum_grid(const Realization& r, double R, const GridSpec& grid,
                         std::int64_t node_cap = kDefaultNodeCap);

// M_R(lambda) along increasing radii, computed incrementally over the
// norm-sorted point list (each term enters once, compensated summation).
std::vector<std::pair<double, std::complex<double>>> radius_sweep(
    const Realization& r, std::vector<double> radii, const Eigen::VectorXd& lambda);

// The windowed Wiener correlation of the centered noise factor
// A_lambda(n) = conj(e(<xi_n,lambda>)) - phi(lambda):
//   F_{R,k}(lambda) = 1/vol(B_R) * sum_{n in L, |n|<=R} A(n) conj(A(n+k)).
// For i.i.d. noise this converges to 1-|phi|^2 at k=0 and 0 elsewhere.
struct CorrelationEstimate {
  Eigen::VectorXd lambda;
  Eigen::VectorXi k_coeffs;
  double R = 0;
  std::complex<double> value;
};

CorrelationEstimate wiener_correlation(const Realization& r,
                                       const Eigen::VectorXd& lambda,
                                       const LatticePoint& k, double R);

// 1/vol(B_R) * sum_i u_i conj(v_i) for sequences aligned with the
// deterministic point order of L within B_R.
std::complex<double> cross_correlation(std::span<const std::complex<double>> u,
                                       std::span<const std::complex<double>> v,
                                       double R, int dim);

// CSV: lambda_1,...,lambda_d,re,im in grid (row-major) order.
void write_field_csv(std::ostream& os, const ExpSumField& field);
ExpSumField load_field_csv(std::istream& is);

}  // namespace lattice_echo
