#include <doctest.h>

#include <cmath>
#include <complex>
#include <sstream>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/expsum.hpp"
#include "lattice_echo/parallel.hpp"
#include "lattice_echo/recovery.hpp"

using namespace lattice_echo;
using Complex = std::complex<double>;

namespace {

const LatticeSpec kZ2 = make_lattice(Eigen::MatrixXd::Identity(2, 2));
const Eigen::VectorXd kZero = Eigen::VectorXd::Zero(2);

Eigen::Vector2d v2(double x, double y) { return {x, y}; }

// Test-side oracle: direct evaluation of the normalized conjugated
// exponential sum with extended-precision accumulation, independent of the
// pairwise path under test.
Complex naive_exp_sum(const Realization& r, double R, const Eigen::VectorXd& l) {
  long double re = 0, im = 0;
  const double R2 = R * R;
  for (std::int64_t i = 0; i < r.size(); ++i) {
    if (r.norm2_w(i) > R2) continue;
    double t = 0;
    for (int j = 0; j < r.dim(); ++j) t += r.position(i)[j] * l[j];
    t -= std::rint(t);
    re += std::cos(2.0 * M_PI * t);
    im -= std::sin(2.0 * M_PI * t);
  }
  const long double divisor = ball_volume(r.dim(), R) / r.lattice().covolume;
  return {static_cast<double>(re / divisor), static_cast<double>(im / divisor)};
}

}  // namespace

TEST_CASE("exp_sum at the origin is the normalized point count") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 1, 100);
  const WindowView win = make_window_view(r, 100);
  const Complex m0 = exp_sum(win, kZero);
  CHECK(m0.imag() == 0.0);
  CHECK(m0.real() ==
        doctest::Approx(static_cast<double>(win.idx.size()) / win.norm_divisor)
            .epsilon(1e-12));
  CHECK(std::abs(m0.real() - 1.0) < 0.05);
}

TEST_CASE("zero noise puts full mass on the dual lattice") {
  const Realization r = realize(kZ2, point_mass_noise(kZero), kZero, 1, 100);
  const WindowView win = make_window_view(r, 100);
  const Complex at_dual = exp_sum(win, v2(1, 0));
  CHECK(std::abs(at_dual -
                 Complex{static_cast<double>(win.idx.size()) / win.norm_divisor, 0}) <
        1e-10);
  const Complex off_dual = exp_sum(win, v2(0.5, 0));
  CHECK(std::abs(off_dual) < 0.05);
  CHECK(std::abs(off_dual - naive_exp_sum(r, 100, v2(0.5, 0))) < 1e-12);
}

TEST_CASE("exp_sum agrees with the extended-precision oracle") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 3, 50);
  RandomStream rng(derive_key(8, 0));
  for (int i = 0; i < 10; ++i) {
    const Eigen::VectorXd l =
        v2(3.0 * rng.next_double() - 1.5, 3.0 * rng.next_double() - 1.5);
    CHECK(std::abs(exp_sum(r, 50, l) - naive_exp_sum(r, 50, l)) < 1e-12);
  }
}

TEST_CASE("exp_sum is hermitian and bounded") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 4, 60);
  const WindowView win = make_window_view(r, 60);
  const double bound = static_cast<double>(win.idx.size()) / win.norm_divisor;
  RandomStream rng(derive_key(8, 1));
  for (int i = 0; i < 20; ++i) {
    const Eigen::VectorXd l =
        v2(5.0 * rng.next_double() - 2.5, 5.0 * rng.next_double() - 2.5);
    const Complex plus = exp_sum(win, l);
    const Complex minus = exp_sum(win, -l);
    CHECK(std::abs(minus - std::conj(plus)) < 1e-15);
    CHECK(std::abs(plus) <= bound + 1e-12);
  }
}

TEST_CASE("zero-noise exp_sum is periodic under dual translations") {
  for (const Eigen::MatrixXd& basis :
       {Eigen::MatrixXd(Eigen::MatrixXd::Identity(2, 2)),
        Eigen::MatrixXd((Eigen::MatrixXd(2, 2) << 2, 0.5, 0, 0.5).finished())}) {
    const LatticeSpec lat = make_lattice(basis);
    const Realization r = realize(lat, point_mass_noise(kZero), kZero, 1, 60);
    const WindowView win = make_window_view(r, 60);
    RandomStream rng(derive_key(8, 2));
    for (int j = 0; j < lat.dim; ++j) {
      const Eigen::VectorXd m = lat.dual_basis.col(j);
      for (int i = 0; i < 5; ++i) {
        const Eigen::VectorXd l =
            v2(rng.next_double() - 0.5, rng.next_double() - 0.5);
        CHECK(std::abs(exp_sum(win, l + m) - exp_sum(win, l)) < 1e-10);
      }
    }
  }
}

TEST_CASE("offset rotates dual peaks by the predicted phase") {
  const Eigen::VectorXd c = v2(0.3, 0.2);
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), c, 5, 150);
  const WindowView win = make_window_view(r, 150);
  for (const Eigen::VectorXd& m : {v2(1, 0), v2(0, 1), v2(1, 1)}) {
    const Complex value = exp_sum(win, m);
    if (std::abs(value) <= 0.1) continue;
    const double predicted = -2.0 * M_PI * m.dot(c);
    const double err = std::remainder(std::arg(value) - predicted, 2.0 * M_PI);
    CHECK(std::abs(err) < 0.1);
  }
}

TEST_CASE("exp_sum is bit-identical for any worker count") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 6, 120);
  const Eigen::VectorXd l = v2(0.37, 0.61);
  set_worker_count(1);
  const Complex serial = exp_sum(r, 120, l);
  set_worker_count(4);
  const Complex parallel = exp_sum(r, 120, l);
  set_worker_count(0);
  CHECK(serial.real() == parallel.real());
  CHECK(serial.imag() == parallel.imag());
}

TEST_CASE("grid evaluation matches pointwise evaluation") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 2, 20);
  const GridSpec grid = make_box_grid(2, -1.2, 1.2, 0.05);
  const ExpSumField field = exp_sum_grid(r, 20, grid);
  const WindowView win = make_window_view(r, 20);
  double worst = 0;
  for (std::int64_t i = 0; i < grid.num_nodes(); i += 7) {
    worst = std::max(worst, std::abs(field.values[i] - exp_sum(win, grid.node(i))));
  }
  CHECK(worst < 1e-12);

  // One-node grid at the window origin reproduces exp_sum bit for bit.
  GridSpec single;
  single.origin = v2(0.25, -0.4);
  single.spacing = 1.0;
  single.counts = {1, 1};
  const ExpSumField one = exp_sum_grid(r, 20, single);
  const Complex direct = exp_sum(win, single.origin);
  CHECK(one.values[0].real() == direct.real());
  CHECK(one.values[0].imag() == direct.imag());
}

TEST_CASE("grid fields are conjugate-symmetric and worker-invariant") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 2, 25);
  const GridSpec grid = make_box_grid(2, -1.0, 1.0, 0.25);
  set_worker_count(3);
  const ExpSumField field = exp_sum_grid(r, 25, grid);
  set_worker_count(1);
  const ExpSumField field1 = exp_sum_grid(r, 25, grid);
  set_worker_count(0);
  const int n = grid.counts[0];
  for (std::int64_t i = 0; i < grid.num_nodes(); ++i) {
    CHECK(field.values[i].real() == field1.values[i].real());
    CHECK(field.values[i].imag() == field1.values[i].imag());
    const std::int64_t mi = static_cast<std::int64_t>(n) * n - 1 - i;  // -lambda
    CHECK(std::abs(field.values[mi] - std::conj(field.values[i])) < 1e-12);
  }
}

TEST_CASE("grid node cap raises GridTooLarge") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 2, 10);
  const GridSpec grid = make_box_grid(2, -1, 1, 0.01);
  CHECK_THROWS_AS(exp_sum_grid(r, 10, grid, /*node_cap=*/100), GridTooLarge);
}

TEST_CASE("the largest field maxima sit on the dual lattice") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 11, 60);
  const GridSpec grid = make_box_grid(2, -1.2, 1.2, 0.01);
  const ExpSumField field = exp_sum_grid(r, 60, grid);
  // Collect local maxima of the real part, take the five largest.
  const int n = grid.counts[0];
  std::vector<std::pair<double, std::int64_t>> maxima;
  for (int i = 1; i + 1 < n; ++i) {
    for (int j = 1; j + 1 < n; ++j) {
      const std::int64_t f = static_cast<std::int64_t>(i) * n + j;
      const double v = field.values[f].real();
      if (v > field.values[f - 1].real() && v > field.values[f + 1].real() &&
          v > field.values[f - n].real() && v > field.values[f + n].real()) {
        maxima.push_back({v, f});
      }
    }
  }
  std::sort(maxima.rbegin(), maxima.rend());
  REQUIRE(maxima.size() >= 5);
  const std::vector<Eigen::Vector2d> duals = {v2(0, 0), v2(1, 0), v2(-1, 0),
                                              v2(0, 1), v2(0, -1)};
  for (int k = 0; k < 5; ++k) {
    const Eigen::VectorXd node = field.grid.node(maxima[k].second);
    double nearest = 1e300;
    for (const auto& m : duals) nearest = std::min(nearest, (node - m).norm());
    CHECK(nearest <= grid.spacing * 1.5);
  }
}

TEST_CASE("radius sweep matches direct evaluation at every radius") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 12, 50);
  const Eigen::VectorXd l = v2(1, 0);
  const std::vector<double> radii = {10, 20, 35, 50};
  const auto sweep = radius_sweep(r, radii, l);
  REQUIRE(sweep.size() == radii.size());
  for (const auto& [R, value] : sweep) {
    CHECK(std::abs(value - exp_sum(r, R, l)) < 1e-10);
  }
}

TEST_CASE("radius sweep converges on and off the dual lattice") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 1, 200);
  const double phi = std::exp(-0.1 * M_PI * M_PI);
  const auto on_dual = radius_sweep(r, {50, 100, 200}, v2(1, 0));
  CHECK(std::abs(on_dual.back().second - Complex{phi, 0}) < 0.05);
  const auto off_dual = radius_sweep(r, {50, 100, 200}, v2(0.37, 0.61));
  CHECK(std::abs(off_dual.back().second) < 0.05);
  CHECK_THROWS_AS(radius_sweep(r, {250}, v2(1, 0)), RadiusExceedsWindow);
}

TEST_CASE("wiener correlations detect the i.i.d. structure") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 1, 155);
  const Eigen::VectorXd l = v2(1, 0);
  const double phi = std::exp(-0.1 * M_PI * M_PI);

  LatticePoint k0{Eigen::VectorXi::Zero(2), kZero};
  const CorrelationEstimate f0 = wiener_correlation(r, l, k0, 150);
  CHECK(std::abs(f0.value - Complex{1 - phi * phi, 0}) < 0.05);
  CHECK(std::abs(f0.value) <= 4.0 + 1e-9);

  for (const auto& [i, j] : {std::pair{1, 0}, {0, 1}, {1, 1}}) {
    LatticePoint k{(Eigen::VectorXi(2) << i, j).finished(),
                   v2(static_cast<double>(i), static_cast<double>(j))};
    CHECK(std::abs(wiener_correlation(r, l, k, 150).value) < 0.05);
  }

  LatticePoint far{(Eigen::VectorXi(2) << 10, 0).finished(), v2(10, 0)};
  CHECK_THROWS_AS(wiener_correlation(r, l, far, 150), RadiusExceedsWindow);
}

TEST_CASE("wiener correlation vanishes identically for zero noise") {
  const Realization r = realize(kZ2, point_mass_noise(kZero), kZero, 1, 40);
  LatticePoint k0{Eigen::VectorXi::Zero(2), kZero};
  CHECK(std::abs(wiener_correlation(r, v2(0.7, 0.1), k0, 30).value) == 0.0);
}

TEST_CASE("cross correlation averages aligned sequences") {
  const auto pts = points_in_ball(kZ2, 100);
  const double m = ball_volume(2, 100);
  std::vector<Complex> ones(pts.size(), Complex{1, 0});
  const Complex self = cross_correlation(ones, ones, 100, 2);
  CHECK(std::abs(self - Complex{static_cast<double>(pts.size()) / m, 0}) < 1e-12);

  // u(n) = e(<n, lambda0>) against all-ones: a plain lattice exponential
  // sum, small off the dual lattice; checked against a direct evaluation.
  const Eigen::VectorXd l0 = v2(0.5, 0);
  std::vector<Complex> u(pts.size());
  long double ore = 0, oim = 0;
  for (std::size_t i = 0; i < pts.size(); ++i) {
    const double t = 2.0 * M_PI * pts[i].position.dot(l0);
    u[i] = {std::cos(t), std::sin(t)};
    ore += u[i].real();
    oim += u[i].imag();
  }
  const Complex uv = cross_correlation(u, ones, 100, 2);
  CHECK(std::abs(uv) < 0.05);
  CHECK(std::abs(uv - Complex{static_cast<double>(ore / m),
                              static_cast<double>(oim / m)}) < 1e-12);

  std::vector<Complex> shorter(10);
  CHECK_THROWS_AS(cross_correlation(u, shorter, 100, 2), LengthMismatch);
}

TEST_CASE("centered noise factors decorrelate from lattice phases") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 2, 200);
  const Eigen::VectorXd l = v2(0.3, 0.7);
  const Complex phi = char_fn(r.noise(), l);
  const double R2 = 200.0 * 200.0;
  std::vector<Complex> u, v;
  for (std::int64_t i = 0; i < r.size(); ++i) {
    if (r.norm2_n(i) > R2) continue;
    const Eigen::VectorXd xi = r.noise_vector(i);
    const Eigen::VectorXd n =
        kZ2.basis * Eigen::Vector2d(r.coeffs(i)[0], r.coeffs(i)[1]);
    const double tx = -2.0 * M_PI * xi.dot(l);
    u.push_back(Complex{std::cos(tx), std::sin(tx)} - phi);
    const double tn = 2.0 * M_PI * n.dot(l);
    v.push_back({std::cos(tn), std::sin(tn)});
  }
  CHECK(std::abs(cross_correlation(u, v, 200, 2)) < 0.05);
}

TEST_CASE("field CSV round-trips grids, values and threshold peaks") {
  const Realization r = realize(kZ2, gaussian_noise(2, 0.1), kZero, 2, 30);
  const GridSpec grid = make_box_grid(2, -1.5, 1.5, 0.125);
  const ExpSumField field = exp_sum_grid(r, 30, grid);
  std::ostringstream os;
  write_field_csv(os, field);
  std::istringstream is(os.str());
  const ExpSumField loaded = load_field_csv(is);
  REQUIRE(loaded.grid.counts == field.grid.counts);
  CHECK(loaded.grid.spacing == field.grid.spacing);
  for (std::int64_t i = 0; i < field.grid.num_nodes(); ++i) {
    CHECK(loaded.values[i].real() == field.values[i].real());
    CHECK(loaded.values[i].imag() == field.values[i].imag());
  }
  const auto orig = threshold_set(field, 0.05);
  const auto redo = threshold_set(loaded, 0.05);
  REQUIRE(orig.size() == redo.size());
  for (std::size_t i = 0; i < orig.size(); ++i) {
    CHECK(orig[i].lambda == redo[i].lambda);
    CHECK(orig[i].value == redo[i].value);
  }
}

TEST_CASE("one-dimensional grids work end to end") {
  const LatticeSpec z1 = make_lattice(Eigen::MatrixXd::Identity(1, 1));
  const Realization r = realize(z1, gaussian_noise(1, 0.1),
                                Eigen::VectorXd::Zero(1), 3, 40);
  const GridSpec grid = make_box_grid(1, -1.5, 1.5, 0.01);
  const ExpSumField field = exp_sum_grid(r, 40, grid);
  const WindowView win = make_window_view(r, 40);
  for (std::int64_t i = 0; i < grid.num_nodes(); i += 17) {
    CHECK(std::abs(field.values[i] - exp_sum(win, grid.node(i))) < 1e-12);
  }
}
