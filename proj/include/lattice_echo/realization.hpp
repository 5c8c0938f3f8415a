#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <vector>

#include "lattice_echo/lattice.hpp"
#include "lattice_echo/noise.hpp"

namespace lattice_echo {

// A reproducible finite window of the perturbed point set
// W = { n + c + xi_n }. Entries cover every lattice point with
// |n| <= gen_radius + slack, in lexicographic coefficient order, and are a
// pure function of (lattice, noise, offset, seed, gen_radius): each point's
// noise is keyed by its integer coefficients, so windows of different radii
// agree on the common index set bit for bit.
class Realization {
 public:
  const LatticeSpec& lattice() const { return lattice_; }
  const NoiseModel& noise() const { return noise_; }
  const Eigen::VectorXd& offset() const { return offset_; }
  std::uint64_t seed() const { return seed_; }
  double gen_radius() const { return gen_radius_; }
  double slack() const { return slack_; }
  int dim() const { return lattice_.dim; }

  std::int64_t size() const { return static_cast<std::int64_t>(norm2_w_.size()); }
  const std::int32_t* coeffs(std::int64_t i) const { return &coeffs_[i * dim()]; }
  const double* position(std::int64_t i) const { return &positions_[i * dim()]; }
  double norm2_w(std::int64_t i) const { return norm2_w_[i]; }
  double norm2_n(std::int64_t i) const { return norm2_n_[i]; }

  // Index of the entry with the given coefficients (entries are sorted
  // lexicographically), or nullopt if outside the generated window.
  std::optional<std::int64_t> find(const Eigen::VectorXi& coeffs) const;

  // xi_n = w - n - c for entry i.
  Eigen::VectorXd noise_vector(std::int64_t i) const;

 private:
  friend Realization realize(const LatticeSpec&, const NoiseModel&,
                             const Eigen::VectorXd&, std::uint64_t, double,
                             std::int64_t);
  LatticeSpec lattice_;
  NoiseModel noise_;
  Eigen::VectorXd offset_;
  std::uint64_t seed_ = 0;
  double gen_radius_ = 0;
  double slack_ = 0;
  std::vector<std::int32_t> coeffs_;    // d-strided
  std::vector<double> positions_;       // d-strided, w = n + c + xi_n
  std::vector<double> norm2_w_;
  std::vector<double> norm2_n_;
};

Realization realize(const LatticeSpec& lattice, const NoiseModel& noise,
                    const Eigen::VectorXd& offset, std::uint64_t seed,
                    double gen_radius, std::int64_t cap = kDefaultPointCap);

// Indices of entries with |w| <= R, in entry (lexicographic) order.
// Requires R <= gen_radius; the slack makes the probability that a true
// member of W within B_R is missing at most ~1e-12 (except for cauchy
// noise, whose slack is capped; see realize()).
std::vector<std::int64_t> window_indices(const Realization& r, double R);

// The displaced positions with |w| <= R.
std::vector<Eigen::VectorXd> window(const Realization& r, double R);

// Boundary-exchange counts at radius R: points that left the ball
// (|n| <= R but |w| > R) and points that entered it (|n| > R, |w| <= R).
struct BoundaryCounts {
  std::int64_t escaped = 0;
  std::int64_t entered = 0;
};
BoundaryCounts boundary_counts(const Realization& r, double R);

// CSV export, one row per window point:
// coeff_1,...,coeff_d,w_1,...,w_d with 17-significant-digit floats.
void write_realization_csv(std::ostream& os, const Realization& r, double R);

}  // namespace lattice_echo
