#include "lattice_echo/lattice.hpp"

#include <algorithm>
#include <cmath>
#include <functional>

#include "lattice_echo/errors.hpp"

namespace lattice_echo {

double ball_volume(int dim, double radius) {
  if (radius < 0) return 0;
  return std::pow(M_PI, dim / 2.0) * std::pow(radius, dim) /
         std::tgamma(dim / 2.0 + 1.0);
}

LatticeSpec make_lattice(const Eigen::MatrixXd& basis) {
  if (basis.rows() != basis.cols() || basis.rows() < 1) {
    throw DimensionMismatch("lattice basis must be a square matrix, d >= 1");
  }
  const int d = static_cast<int>(basis.rows());
  double max_col = 0;
  for (int j = 0; j < d; ++j) max_col = std::max(max_col, basis.col(j).norm());
  const double det = basis.determinant();
  if (std::abs(det) < 1e-12 * std::pow(max_col, d) || max_col == 0) {
    throw SingularBasis("lattice basis is singular or nearly singular");
  }
  LatticeSpec lat;
  lat.dim = d;
  lat.basis = basis;
  lat.covolume = std::abs(det);
  lat.dual_basis = basis.inverse().transpose();
  return lat;
}

LatticeSpec dual_lattice(const LatticeSpec& lat) {
  return make_lattice(lat.dual_basis);
}

namespace {

// Recursive walk over the coefficient box, most significant coordinate
// first so the visit order is lexicographic in coeffs.
struct BallWalker {
  const LatticeSpec& lat;
  double R2;
  std::vector<std::int64_t> bound;
  Eigen::VectorXi coeffs;
  Eigen::VectorXd position;
  const std::function<void(const Eigen::VectorXi&, const Eigen::VectorXd&)>& fn;

  void walk(int level) {
    if (level == lat.dim) {
      if (position.squaredNorm() <= R2) fn(coeffs, position);
      return;
    }
    const std::int64_t b = bound[level];
    for (std::int64_t c = -b; c <= b; ++c) {
      coeffs[level] = static_cast<int>(c);
      position += static_cast<double>(c) * lat.basis.col(level);
      walk(level + 1);
      position -= static_cast<double>(c) * lat.basis.col(level);
    }
  }
};

}  // namespace

void for_each_point_in_ball(
    const LatticeSpec& lat, double R,
    const std::function<void(const Eigen::VectorXi&, const Eigen::VectorXd&)>& fn,
    std::int64_t cap) {
  if (R < 0) throw Error("points_in_ball: R must be nonnegative");
  const int d = lat.dim;
  std::vector<std::int64_t> bound(d);
  double predicted = 1;
  for (int i = 0; i < d; ++i) {
    // |c_i| = |<i-th dual generator, x>| <= R * |dual generator|.
    bound[i] = static_cast<std::int64_t>(
        std::floor(R * lat.dual_basis.col(i).norm() + 1e-9));
    predicted *= static_cast<double>(2 * bound[i] + 1);
  }
  if (predicted > static_cast<double>(cap)) {
    throw WindowTooLarge("points_in_ball: predicted enumeration of " +
                         std::to_string(predicted) + " points exceeds cap " +
                         std::to_string(cap));
  }
  BallWalker walker{lat, R * R, std::move(bound), Eigen::VectorXi::Zero(d),
                    Eigen::VectorXd::Zero(d), fn};
  walker.walk(0);
}

std::vector<LatticePoint> points_in_ball(const LatticeSpec& lat, double R,
                                         std::int64_t cap) {
  std::vector<LatticePoint> out;
  for_each_point_in_ball(
      lat, R,
      [&](const Eigen::VectorXi& c, const Eigen::VectorXd& p) {
        out.push_back({c, p});
      },
      cap);
  return out;
}

GaussDiscrepancy gauss_discrepancy(const LatticeSpec& lat, double R,
                                   std::int64_t cap) {
  if (R < 1) throw Error("gauss_discrepancy: R must be >= 1");
  std::int64_t count = 0;
  for_each_point_in_ball(
      lat, R, [&](const Eigen::VectorXi&, const Eigen::VectorXd&) { ++count; },
      cap);
  const double expected = ball_volume(lat.dim, R) / lat.covolume;
  return {count, std::abs(static_cast<double>(count) - expected)};
}

namespace {

// Canonical sign: flip each column so its entry of largest magnitude
// (first such entry on ties) is positive. Keeps reduction deterministic.
void fix_column_signs(Eigen::MatrixXd& m) {
  for (int j = 0; j < m.cols(); ++j) {
    int arg = 0;
    for (int i = 1; i < m.rows(); ++i) {
      if (std::abs(m(i, j)) > std::abs(m(arg, j))) arg = i;
    }
    if (m(arg, j) < 0) m.col(j) = -m.col(j);
  }
}

Eigen::MatrixXd lagrange_gauss(Eigen::MatrixXd b) {
  // Exact two-dimensional reduction: terminates with |b0| <= |b1| and
  // |<b0,b1>| <= |b0|^2 / 2, i.e. the first column is a shortest vector.
  if (b.col(0).squaredNorm() > b.col(1).squaredNorm()) b.col(0).swap(b.col(1));
  for (;;) {
    const double mu = b.col(1).dot(b.col(0)) / b.col(0).squaredNorm();
    const double q = std::round(mu);
    if (q != 0) b.col(1) -= q * b.col(0);
    if (b.col(1).squaredNorm() >= b.col(0).squaredNorm()) break;
    b.col(0).swap(b.col(1));
  }
  return b;
}

Eigen::MatrixXd lll_reduce(Eigen::MatrixXd b, double delta) {
  const int n = static_cast<int>(b.cols());
  auto gram_schmidt = [&](Eigen::MatrixXd& q, Eigen::MatrixXd& mu) {
    q = b;
    mu.setIdentity();
    for (int i = 0; i < n; ++i) {
      for (int j = 0; j < i; ++j) {
        mu(j, i) = b.col(i).dot(q.col(j)) / q.col(j).squaredNorm();
        q.col(i) -= mu(j, i) * q.col(j);
      }
    }
  };
  Eigen::MatrixXd q(b.rows(), n), mu(n, n);
  gram_schmidt(q, mu);
  int k = 1;
  while (k < n) {
    for (int j = k - 1; j >= 0; --j) {
      const double r = std::round(mu(j, k));
      if (r != 0) {
        b.col(k) -= r * b.col(j);
        gram_schmidt(q, mu);
      }
    }
    if (q.col(k).squaredNorm() >=
        (delta - mu(k - 1, k) * mu(k - 1, k)) * q.col(k - 1).squaredNorm()) {
      ++k;
    } else {
      b.col(k).swap(b.col(k - 1));
      gram_schmidt(q, mu);
      k = std::max(k - 1, 1);
    }
  }
  return b;
}

}  // namespace

Eigen::MatrixXd reduce_basis(const Eigen::MatrixXd& basis) {
  make_lattice(basis);  // validates full rank
  Eigen::MatrixXd out;
  if (basis.cols() == 1) {
    out = basis;
  } else if (basis.cols() == 2) {
    out = lagrange_gauss(basis);
  } else {
    out = lll_reduce(basis, 0.75);
  }
  fix_column_signs(out);
  return out;
}

bool lattices_equivalent(const LatticeSpec& a, const LatticeSpec& b,
                         double tol) {
  if (a.dim != b.dim) throw DimensionMismatch("lattices_equivalent: dim");
  auto integral = [tol](const Eigen::MatrixXd& m) {
    for (int i = 0; i < m.rows(); ++i) {
      for (int j = 0; j < m.cols(); ++j) {
        if (std::abs(m(i, j) - std::round(m(i, j))) > tol) return false;
      }
    }
    return true;
  };
  const Eigen::MatrixXd ab = a.basis.inverse() * b.basis;
  const Eigen::MatrixXd ba = b.basis.inverse() * a.basis;
  return integral(ab) && integral(ba);
}

}  // namespace lattice_echo
