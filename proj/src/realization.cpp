#include "lattice_echo/realization.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "lattice_echo/errors.hpp"

namespace lattice_echo {

namespace {

double compute_slack(const LatticeSpec& lat, const NoiseModel& noise,
                     double gen_radius) {
  // Union-bound budget of 1e-12 spread over the points that could cross
  // the generation boundary; their count is estimated from a width-4
  // shell.
  const double shell =
      (ball_volume(lat.dim, gen_radius + 2.0) -
       ball_volume(lat.dim, std::max(0.0, gen_radius - 2.0))) /
      lat.covolume;
  const double p = 1e-12 / std::max(1.0, shell);
  double s = std::max(1.0, tail_quantile(noise, p));
  if (noise.kind == NoiseKind::kCauchy) {
    // The cauchy tail quantile is astronomically large at this budget;
    // cap the slack and accept possible undercoverage of the window.
    s = std::min(s, 50.0 * noise.gamma);
  }
  return s;
}

}  // namespace

Realization realize(const LatticeSpec& lattice, const NoiseModel& noise,
                    const Eigen::VectorXd& offset, std::uint64_t seed,
                    double gen_radius, std::int64_t cap) {
  if (gen_radius < 0) throw Error("realize: gen_radius must be nonnegative");
  if (noise.dim != lattice.dim || offset.size() != lattice.dim) {
    throw DimensionMismatch("realize: lattice, noise and offset dimensions");
  }
  Realization r;
  r.lattice_ = lattice;
  r.noise_ = noise;
  r.offset_ = offset;
  r.seed_ = seed;
  r.gen_radius_ = gen_radius;
  r.slack_ = compute_slack(lattice, noise, gen_radius) + offset.norm();

  const int d = lattice.dim;
  std::vector<std::int64_t> ckey(d);
  for_each_point_in_ball(
      lattice, gen_radius + r.slack_,
      [&](const Eigen::VectorXi& c, const Eigen::VectorXd& n) {
        for (int j = 0; j < d; ++j) ckey[j] = c[j];
        const Eigen::VectorXd xi = sample_noise(noise, point_key(seed, ckey));
        const Eigen::VectorXd w = n + offset + xi;
        for (int j = 0; j < d; ++j) {
          r.coeffs_.push_back(c[j]);
          r.positions_.push_back(w[j]);
        }
        r.norm2_w_.push_back(w.squaredNorm());
        r.norm2_n_.push_back(n.squaredNorm());
      },
      cap);
  return r;
}

std::optional<std::int64_t> Realization::find(const Eigen::VectorXi& c) const {
  const int d = dim();
  const std::int64_t n = size();
  auto less = [&](std::int64_t i, const Eigen::VectorXi& key) {
    for (int j = 0; j < d; ++j) {
      if (coeffs_[i * d + j] != key[j]) return coeffs_[i * d + j] < key[j];
    }
    return false;
  };
  std::int64_t lo = 0, hi = n;
  while (lo < hi) {
    const std::int64_t mid = (lo + hi) / 2;
    if (less(mid, c)) {
      lo = mid + 1;
    } else {
      hi = mid;
    }
  }
  if (lo == n) return std::nullopt;
  for (int j = 0; j < d; ++j) {
    if (coeffs_[lo * d + j] != c[j]) return std::nullopt;
  }
  return lo;
}

Eigen::VectorXd Realization::noise_vector(std::int64_t i) const {
  const int d = dim();
  Eigen::VectorXd n = Eigen::VectorXd::Zero(d);
  for (int j = 0; j < d; ++j) {
    n += static_cast<double>(coeffs_[i * d + j]) * lattice_.basis.col(j);
  }
  Eigen::VectorXd xi(d);
  for (int j = 0; j < d; ++j) xi[j] = positions_[i * d + j] - n[j] - offset_[j];
  return xi;
}

std::vector<std::int64_t> window_indices(const Realization& r, double R) {
  if (R > r.gen_radius()) {
    throw RadiusExceedsWindow("window: R exceeds the generation radius");
  }
  std::vector<std::int64_t> idx;
  const double R2 = R * R;
  for (std::int64_t i = 0; i < r.size(); ++i) {
    if (r.norm2_w(i) <= R2) idx.push_back(i);
  }
  return idx;
}

std::vector<Eigen::VectorXd> window(const Realization& r, double R) {
  std::vector<Eigen::VectorXd> out;
  const int d = r.dim();
  for (std::int64_t i : window_indices(r, R)) {
    out.emplace_back(Eigen::Map<const Eigen::VectorXd>(r.position(i), d));
  }
  return out;
}

BoundaryCounts boundary_counts(const Realization& r, double R) {
  if (R > r.gen_radius()) {
    throw RadiusExceedsWindow("boundary_counts: R exceeds the generation radius");
  }
  BoundaryCounts counts;
  const double R2 = R * R;
  for (std::int64_t i = 0; i < r.size(); ++i) {
    const bool n_in = r.norm2_n(i) <= R2;
    const bool w_in = r.norm2_w(i) <= R2;
    if (n_in && !w_in) ++counts.escaped;
    if (!n_in && w_in) ++counts.entered;
  }
  return counts;
}

void write_realization_csv(std::ostream& os, const Realization& r, double R) {
  const int d = r.dim();
  for (int j = 0; j < d; ++j) os << "coeff_" << j + 1 << ",";
  for (int j = 0; j < d; ++j) os << "w_" << j + 1 << (j + 1 < d ? "," : "\n");
  char buf[32];
  for (std::int64_t i : window_indices(r, R)) {
    for (int j = 0; j < d; ++j) os << r.coeffs(i)[j] << ",";
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", r.position(i)[j]);
      os << buf << (j + 1 < d ? "," : "\n");
    }
  }
}

}  // namespace lattice_echo
