#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <set>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/lattice.hpp"
#include "lattice_echo/rng.hpp"

using namespace lattice_echo;

namespace {

Eigen::MatrixXd mat2(double a, double b, double c, double d) {
  Eigen::MatrixXd m(2, 2);
  m << a, b, c, d;
  return m;
}

// The paper's second example lattice, A * Z^2.
const Eigen::MatrixXd kA = mat2(2, 0.5, 0, 0.5);

// Test-side oracle: integer points of Z^2 with |n| <= R, by exhaustive
// enumeration of the surrounding square.
std::int64_t brute_count_z2(double R) {
  const std::int64_t b = static_cast<std::int64_t>(std::floor(R)) + 1;
  std::int64_t count = 0;
  for (std::int64_t i = -b; i <= b; ++i) {
    for (std::int64_t j = -b; j <= b; ++j) {
      if (i * i + j * j <= R * R) ++count;
    }
  }
  return count;
}

std::multiset<std::pair<double, double>> position_set(
    const std::vector<LatticePoint>& pts, double snap = 1e-9) {
  std::multiset<std::pair<double, double>> s;
  for (const auto& p : pts) {
    s.insert({std::round(p.position[0] / snap) * snap,
              std::round(p.position[1] / snap) * snap});
  }
  return s;
}

}  // namespace

TEST_CASE("make_lattice computes covolume and dual") {
  const LatticeSpec z2 = make_lattice(Eigen::MatrixXd::Identity(2, 2));
  CHECK(z2.covolume == 1.0);
  CHECK((z2.dual_basis - Eigen::MatrixXd::Identity(2, 2)).norm() == 0.0);

  const LatticeSpec l2 = make_lattice(kA);
  CHECK(l2.covolume == doctest::Approx(1.0).epsilon(1e-14));
  CHECK((l2.dual_basis - mat2(0.5, 0, -0.5, 2)).lpNorm<Eigen::Infinity>() < 1e-14);

  // Every primal-dual generator pairing is an integer (the identity).
  const Eigen::MatrixXd gram = l2.basis.transpose() * l2.dual_basis;
  CHECK((gram - Eigen::MatrixXd::Identity(2, 2)).lpNorm<Eigen::Infinity>() < 1e-12);

  CHECK_THROWS_AS(make_lattice(mat2(1, 1, 1, 1)), SingularBasis);
}

TEST_CASE("dual lattice inverts covolume and is an involution") {
  const LatticeSpec diag = make_lattice(mat2(2, 0, 0, 0.5));
  const LatticeSpec dual = dual_lattice(diag);
  CHECK((dual.basis - mat2(0.5, 0, 0, 2)).lpNorm<Eigen::Infinity>() < 1e-14);
  CHECK(dual.covolume == doctest::Approx(1.0 / diag.covolume));

  const LatticeSpec l2 = make_lattice(kA);
  CHECK((dual_lattice(dual_lattice(l2)).basis - l2.basis).lpNorm<Eigen::Infinity>() <
        1e-12);

  const LatticeSpec z1 = make_lattice(Eigen::MatrixXd::Identity(1, 1));
  CHECK(dual_lattice(z1).basis(0, 0) == 1.0);
}

TEST_CASE("points_in_ball enumerates exactly and in lexicographic order") {
  const LatticeSpec z2 = make_lattice(Eigen::MatrixXd::Identity(2, 2));
  CHECK(points_in_ball(z2, 0).size() == 1);
  CHECK(points_in_ball(z2, 2).size() == 13);
  CHECK(static_cast<std::int64_t>(points_in_ball(z2, 10).size()) ==
        brute_count_z2(10));
  CHECK(points_in_ball(z2, 10).size() == 317);

  const auto pts = points_in_ball(z2, 3);
  for (std::size_t i = 1; i < pts.size(); ++i) {
    const auto& a = pts[i - 1].coeffs;
    const auto& b = pts[i].coeffs;
    CHECK((a[0] < b[0] || (a[0] == b[0] && a[1] < b[1])));
  }
  for (const auto& p : pts) {
    CHECK((z2.basis * p.coeffs.cast<double>() - p.position).norm() == 0.0);
  }
}

TEST_CASE("points_in_ball nests over radii and respects the cap") {
  const LatticeSpec l2 = make_lattice(kA);
  const auto small = position_set(points_in_ball(l2, 5));
  const auto large = position_set(points_in_ball(l2, 9));
  for (const auto& p : small) CHECK(large.count(p) >= 1);
  CHECK(small.size() < large.size());

  CHECK_THROWS_AS(points_in_ball(l2, 50, /*cap=*/100), WindowTooLarge);
}

TEST_CASE("points_in_ball is invariant under unimodular basis changes") {
  RandomStream rng(derive_key(13, 99));
  const LatticeSpec base = make_lattice(kA);
  const auto expected = position_set(points_in_ball(base, 4));
  int tested = 0;
  while (tested < 10) {
    Eigen::MatrixXd u(2, 2);
    for (int i = 0; i < 4; ++i) {
      u(i / 2, i % 2) = std::floor(rng.next_double() * 7.0) - 3.0;
    }
    const double det = u.determinant();
    if (std::abs(det) != 1.0) continue;
    ++tested;
    const LatticeSpec changed = make_lattice(base.basis * u);
    CHECK(position_set(points_in_ball(changed, 4)) == expected);
  }
}

TEST_CASE("gauss discrepancy matches the counting oracle") {
  const LatticeSpec z2 = make_lattice(Eigen::MatrixXd::Identity(2, 2));
  const GaussDiscrepancy g = gauss_discrepancy(z2, 10);
  CHECK(g.count == 317);
  CHECK(g.discrepancy == doctest::Approx(std::abs(317 - 100 * M_PI)).epsilon(1e-12));

  const LatticeSpec z1 = make_lattice(Eigen::MatrixXd::Identity(1, 1));
  const GaussDiscrepancy g1 = gauss_discrepancy(z1, 5);
  CHECK(g1.count == 11);
  CHECK(g1.discrepancy == doctest::Approx(1.0));

  CHECK_THROWS(gauss_discrepancy(z2, 0.5));
}

TEST_CASE("gauss discrepancy stays below C * R^{d-1} along a radius ladder") {
  for (const Eigen::MatrixXd& basis :
       {Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)), Eigen::MatrixXd(kA)}) {
    const LatticeSpec lat = make_lattice(basis);
    double worst = 0;
    for (double R = 10; R <= 200; R += 10) {
      const GaussDiscrepancy g = gauss_discrepancy(lat, R);
      worst = std::max(worst, g.discrepancy / R);
    }
    CHECK(worst <= 6.0);
  }
}

TEST_CASE("reduce_basis finds short vectors") {
  const Eigen::MatrixXd sheared = reduce_basis(mat2(1, 1, 0, 1));
  CHECK(sheared.col(0).norm() == doctest::Approx(1.0));
  CHECK(sheared.col(1).norm() == doctest::Approx(1.0));

  // d=2 reduction is exact: the first vector must be a shortest nonzero
  // lattice vector; brute force over the coefficient box is the oracle.
  const Eigen::MatrixXd reduced = reduce_basis(kA);
  double shortest = 1e300;
  for (int i = -10; i <= 10; ++i) {
    for (int j = -10; j <= 10; ++j) {
      if (i == 0 && j == 0) continue;
      shortest = std::min(shortest, (kA * Eigen::Vector2d(i, j)).norm());
    }
  }
  CHECK(reduced.col(0).norm() == doctest::Approx(shortest).epsilon(1e-12));
  CHECK(lattices_equivalent(make_lattice(kA), make_lattice(reduced), 1e-9));

  const Eigen::MatrixXd again = reduce_basis(reduced);
  CHECK((again - reduced).lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("reduce_basis keeps the lattice for random bases") {
  RandomStream rng(derive_key(31, 0));
  int tested = 0;
  while (tested < 30) {
    Eigen::MatrixXd b(2, 2);
    for (int i = 0; i < 4; ++i) b(i / 2, i % 2) = 4.0 * rng.next_double() - 2.0;
    if (std::abs(b.determinant()) < 0.1) continue;
    ++tested;
    const Eigen::MatrixXd r = reduce_basis(b);
    CHECK(lattices_equivalent(make_lattice(b), make_lattice(r), 1e-9));
    CHECK(r.col(0).norm() <= r.col(1).norm() * (1 + 1e-12));
  }
}

TEST_CASE("reduce_basis handles d=3 via LLL") {
  Eigen::MatrixXd b(3, 3);
  b << 1, 2, 3,
       0, 1, 5,
       0, 0, 1;
  const Eigen::MatrixXd r = reduce_basis(b);
  CHECK(lattices_equivalent(make_lattice(b), make_lattice(r), 1e-9));
  CHECK(r.col(0).norm() <= b.col(2).norm());
}

TEST_CASE("lattices_equivalent detects unimodular relations") {
  const LatticeSpec z2 = make_lattice(Eigen::MatrixXd::Identity(2, 2));
  CHECK(lattices_equivalent(make_lattice(mat2(1, 1, 0, 1)), z2));
  CHECK_FALSE(lattices_equivalent(make_lattice(mat2(2, 0, 0, 0.5)), z2));

  const LatticeSpec l2 = make_lattice(kA);
  const LatticeSpec swapped = make_lattice(mat2(-0.5, 2, -0.5, 0));
  CHECK(lattices_equivalent(l2, swapped));

  const LatticeSpec z1 = make_lattice(Eigen::MatrixXd::Identity(1, 1));
  CHECK_THROWS_AS(lattices_equivalent(z1, z2), DimensionMismatch);
}

TEST_CASE("reductions of random unimodular scrambles stay equivalent") {
  RandomStream rng(derive_key(77, 5));
  const LatticeSpec l2 = make_lattice(kA);
  int tested = 0;
  while (tested < 10) {
    Eigen::MatrixXd u(2, 2);
    for (int i = 0; i < 4; ++i) {
      u(i / 2, i % 2) = std::floor(rng.next_double() * 7.0) - 3.0;
    }
    if (std::abs(u.determinant()) != 1.0) continue;
    ++tested;
    const Eigen::MatrixXd scrambled = kA * u;
    CHECK(lattices_equivalent(make_lattice(reduce_basis(scrambled)), l2, 1e-9));
  }
}

TEST_CASE("ball volumes match the closed forms") {
  CHECK(ball_volume(1, 5) == doctest::Approx(10.0));
  CHECK(ball_volume(2, 10) == doctest::Approx(100.0 * M_PI));
  CHECK(ball_volume(3, 1) == doctest::Approx(4.0 * M_PI / 3.0));
}
