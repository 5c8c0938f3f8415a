#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <vector>

namespace lattice_echo {

// A full-rank lattice in R^d. Basis columns are the generators; the dual
// basis is the inverse transpose, so <primal generator, dual generator>
// is the integer Kronecker pairing.
struct LatticeSpec {
  int dim = 0;
  Eigen::MatrixXd basis;       // columns generate the lattice
  double covolume = 0;         // |det(basis)|
  Eigen::MatrixXd dual_basis;  // basis^{-T}
};

struct LatticePoint {
  Eigen::VectorXi coeffs;    // coordinates in the basis
  Eigen::VectorXd position;  // basis * coeffs
};

// Volume of the Euclidean ball of radius R in dimension d.
double ball_volume(int dim, double radius);

// Builds a LatticeSpec, rejecting near-singular input
// (|det| < 1e-12 * (max column norm)^d).
LatticeSpec make_lattice(const Eigen::MatrixXd& basis);

LatticeSpec dual_lattice(const LatticeSpec& lat);

inline constexpr std::int64_t kDefaultPointCap = 100'000'000;

// All lattice points with |position| <= R, in lexicographic coefficient
// order. Enumeration walks the coefficient box |c_i| <= R * |i-th dual
// generator| and filters by exact norm, which stays correct for skew
// bases. Throws WindowTooLarge when the box exceeds `cap` points.
std::vector<LatticePoint> points_in_ball(const LatticeSpec& lat, double R,
                                         std::int64_t cap = kDefaultPointCap);

// Streaming variant used by the sampler; fn(coeffs, position) is called in
// the same lexicographic order.
void for_each_point_in_ball(
    const LatticeSpec& lat, double R,
    const std::function<void(const Eigen::VectorXi&, const Eigen::VectorXd&)>& fn,
    std::int64_t cap = kDefaultPointCap);

// N_L(R) together with |N_L(R) - vol(B_R)/covolume| (the Gauss-type
// discrepancy; the classical bound is C(L) * R^{d-1}).
struct GaussDiscrepancy {
  std::int64_t count = 0;
  double discrepancy = 0;
};
GaussDiscrepancy gauss_discrepancy(const LatticeSpec& lat, double R,
                                   std::int64_t cap = kDefaultPointCap);

// Basis reduction generating the same lattice: exact Lagrange-Gauss for
// d=2, LLL with delta=3/4 for d>=3 (approximate). d=1 returns the basis
// with a canonical sign.
Eigen::MatrixXd reduce_basis(const Eigen::MatrixXd& basis);

// True iff the two bases generate the same lattice: A^{-1}B and B^{-1}A
// must both be integer matrices to within tol (entrywise distance to the
// nearest integer).
bool lattices_equivalent(const LatticeSpec& a, const LatticeSpec& b,
                         double tol = 1e-6);

}  // namespace lattice_echo
