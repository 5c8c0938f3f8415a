#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "lattice_echo/lattice.hpp"

namespace lattice_echo {

// A nonnegative density on the fundamental cell of the dual lattice,
// parameterized by dual-basis coordinates t in [0,1)^d: the physical point
// is x = dual_basis * t, and for a primal point n with coefficients z,
// <n, x> = <z, t>. Sampled on the regular grid t_i = j/grid_n (that
// equal-weight rule integrates trigonometric polynomials of degree < grid_n
// exactly and keeps t = 0 on the grid).
struct DensityMeasure {
  int dim = 0;
  int grid_n = 0;
  std::vector<double> density;  // row-major over [0,1)^d, last axis fastest
  double cell_volume = 0;       // quadrature weight per node

  std::int64_t num_nodes() const { return static_cast<std::int64_t>(density.size()); }
  double mass() const;
};

// The periodogram measure of a sequence u on L within B_R:
//   density(x) = 1/vol(B_R) * | sum_n u(n) e(<n,x>) |^2,
// whose Fourier coefficients are the windowed correlations of u.
// `coeffs` are the integer coefficients of the points carrying u, aligned
// with u and d-strided (the deterministic point order).
DensityMeasure periodogram_density(std::span<const std::complex<double>> u,
                                   std::span<const std::int32_t> coeffs,
                                   const LatticeSpec& lat, double R, int grid_n);

// Pointwise evaluation of the same density at one cell coordinate t.
double periodogram_density_at(std::span<const std::complex<double>> u,
                              std::span<const std::int32_t> coeffs,
                              const LatticeSpec& lat, double R,
                              const Eigen::VectorXd& t);

// Quadrature of density(x) * e(<k,x>) over the cell; for periodograms
// this reproduces the windowed correlation
// 1/vol(B_R) * sum_n u(n) conj(u(n+k)).
std::complex<double> measure_fourier_coeff(const DensityMeasure& m,
                                           const LatticePoint& k);

// Hellinger affinity rho(mu, nu) = integral of sqrt(density_mu * density_nu)
// with the cell's uniform measure as reference. Zero exactly for mutually
// singular measures; rho(mu, mu) is the total mass.
double hellinger_affinity(const DensityMeasure& mu, const DensityMeasure& nu);

// CSV: x_1,...,x_d,density (cell coordinates).
void write_measure_csv(std::ostream& os, const DensityMeasure& m);

}  // namespace lattice_echo
