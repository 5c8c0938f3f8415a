#pragma once

#include <Eigen/Dense>
#include <complex>
#include <string>

#include "lattice_echo/rng.hpp"

namespace lattice_echo {

enum class NoiseKind {
  kGaussian,     // isotropic, dispersion a: density (pi*a)^{-d/2} exp(-|x|^2/a)
  kUniformBox,   // independent U[-h, h] per coordinate
  kUniformCell,  // uniform on the centered fundamental cell of a lattice
  kLaplace,      // independent Laplace(scale b) per coordinate
  kPointMass,    // deterministic shift v
  kCauchy,       // independent Cauchy(scale gamma) per coordinate
};

// A perturbation law xi together with its analytic characteristic function
// under the conjugated-exponential convention: phi(lambda) =
// E[conj(e(<xi,lambda>))] with e(t) = exp(2*pi*i*t).
struct NoiseModel {
  NoiseKind kind = NoiseKind::kGaussian;
  int dim = 2;
  double a = 0.1;           // gaussian dispersion; per-coordinate variance a/2
  double h = 0.5;           // uniform_box half width
  double b = 1.0;           // laplace scale
  double gamma = 1.0;       // cauchy scale
  Eigen::VectorXd v;        // point_mass shift
  Eigen::MatrixXd cell_basis;  // uniform_cell lattice basis
  // Whether E|xi|^{d+eps} < infinity for some eps > 0 (false only for
  // cauchy); diagnostics that rely on the moment condition report without
  // a verdict when this is false.
  bool moment_exponent_ok = true;

  bool symmetric() const;
};

NoiseModel gaussian_noise(int dim, double a);
NoiseModel uniform_box_noise(int dim, double h);
NoiseModel uniform_cell_noise(const Eigen::MatrixXd& cell_basis);
NoiseModel laplace_noise(int dim, double b);
NoiseModel point_mass_noise(const Eigen::VectorXd& v);
NoiseModel cauchy_noise(int dim, double gamma);

const char* noise_kind_name(NoiseKind kind);

// Analytic characteristic function phi_xi(lambda). Total function;
// |phi| <= 1 and phi(-lambda) = conj(phi(lambda)).
std::complex<double> char_fn(const NoiseModel& model, const Eigen::VectorXd& lambda);

// One draw of xi as a pure function of (model, key). Gaussian via
// Box-Muller, Laplace via inverse CDF, Cauchy via the tangent transform.
Eigen::VectorXd sample_noise(const NoiseModel& model, Key128 key);

// r such that P(|xi| > r) <= p. Analytic bounds per kind: chi-square
// (Laurent-Massart) for gaussian, support radius for the bounded kinds,
// union bounds for laplace and cauchy.
double tail_quantile(const NoiseModel& model, double p);

}  // namespace lattice_echo
