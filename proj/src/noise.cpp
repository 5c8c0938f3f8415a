#include "lattice_echo/noise.hpp"

#include <cmath>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/lattice.hpp"

namespace lattice_echo {

namespace {

void require_positive(double x, const char* name) {
  if (!(x > 0) || !std::isfinite(x)) {
    throw ValidationError(name, "must be a positive finite number");
  }
}

double sinc_pi(double t) {
  // sin(pi t) / (pi t), continuous at 0.
  if (t == 0) return 1.0;
  const double x = M_PI * t;
  return std::sin(x) / x;
}

}  // namespace

bool NoiseModel::symmetric() const {
  if (kind == NoiseKind::kPointMass) return v.isZero(0.0);
  return true;
}

NoiseModel gaussian_noise(int dim, double a) {
  require_positive(a, "noise.a");
  NoiseModel m;
  m.kind = NoiseKind::kGaussian;
  m.dim = dim;
  m.a = a;
  return m;
}

NoiseModel uniform_box_noise(int dim, double h) {
  require_positive(h, "noise.h");
  NoiseModel m;
  m.kind = NoiseKind::kUniformBox;
  m.dim = dim;
  m.h = h;
  return m;
}

NoiseModel uniform_cell_noise(const Eigen::MatrixXd& cell_basis) {
  make_lattice(cell_basis);  // validates
  NoiseModel m;
  m.kind = NoiseKind::kUniformCell;
  m.dim = static_cast<int>(cell_basis.rows());
  m.cell_basis = cell_basis;
  return m;
}

NoiseModel laplace_noise(int dim, double b) {
  require_positive(b, "noise.b");
  NoiseModel m;
  m.kind = NoiseKind::kLaplace;
  m.dim = dim;
  m.b = b;
  return m;
}

NoiseModel point_mass_noise(const Eigen::VectorXd& v) {
  if (!v.allFinite()) throw ValidationError("noise.v", "must be finite");
  NoiseModel m;
  m.kind = NoiseKind::kPointMass;
  m.dim = static_cast<int>(v.size());
  m.v = v;
  return m;
}

NoiseModel cauchy_noise(int dim, double gamma) {
  require_positive(gamma, "noise.gamma");
  NoiseModel m;
  m.kind = NoiseKind::kCauchy;
  m.dim = dim;
  m.gamma = gamma;
  m.moment_exponent_ok = false;
  return m;
}

const char* noise_kind_name(NoiseKind kind) {
  switch (kind) {
    case NoiseKind::kGaussian: return "gaussian";
    case NoiseKind::kUniformBox: return "uniform_box";
    case NoiseKind::kUniformCell: return "uniform_cell";
    case NoiseKind::kLaplace: return "laplace";
    case NoiseKind::kPointMass: return "point_mass";
    case NoiseKind::kCauchy: return "cauchy";
  }
  return "?";
}

std::complex<double> char_fn(const NoiseModel& model, const Eigen::VectorXd& lambda) {
  switch (model.kind) {
    case NoiseKind::kGaussian:
      return {std::exp(-model.a * M_PI * M_PI * lambda.squaredNorm()), 0.0};
    case NoiseKind::kUniformBox: {
      double p = 1.0;
      for (int j = 0; j < model.dim; ++j) p *= sinc_pi(2.0 * model.h * lambda[j]);
      return {p, 0.0};
    }
    case NoiseKind::kUniformCell: {
      // xi = B(u - 1/2), u uniform on [0,1)^d: phi = prod_j sinc(pi t_j)
      // with t = B^T lambda. t is integral exactly on the dual lattice,
      // so phi vanishes on L* \ {0} (the cloaked case).
      const Eigen::VectorXd t = model.cell_basis.transpose() * lambda;
      double p = 1.0;
      for (int j = 0; j < model.dim; ++j) p *= sinc_pi(t[j]);
      return {p, 0.0};
    }
    case NoiseKind::kLaplace: {
      double p = 1.0;
      for (int j = 0; j < model.dim; ++j) {
        const double w = 2.0 * M_PI * model.b * lambda[j];
        p *= 1.0 / (1.0 + w * w);
      }
      return {p, 0.0};
    }
    case NoiseKind::kPointMass: {
      const double t = -2.0 * M_PI * model.v.dot(lambda);
      return {std::cos(t), std::sin(t)};
    }
    case NoiseKind::kCauchy: {
      // Per-coordinate product exp(-2 pi gamma |lambda_j|), i.e.
      // exp(-2 pi gamma * l1-norm of lambda).
      return {std::exp(-2.0 * M_PI * model.gamma * lambda.lpNorm<1>()), 0.0};
    }
  }
  return {1.0, 0.0};
}

Eigen::VectorXd sample_noise(const NoiseModel& model, Key128 key) {
  const int d = model.dim;
  Eigen::VectorXd xi(d);
  RandomStream rng(key);
  switch (model.kind) {
    case NoiseKind::kGaussian: {
      const double sigma = std::sqrt(model.a / 2.0);
      for (int j = 0; j < d; j += 2) {
        const double u1 = rng.next_double_pos();
        const double u2 = rng.next_double();
        const double r = std::sqrt(-2.0 * std::log(u1));
        xi[j] = sigma * r * std::cos(2.0 * M_PI * u2);
        if (j + 1 < d) xi[j + 1] = sigma * r * std::sin(2.0 * M_PI * u2);
      }
      break;
    }
    case NoiseKind::kUniformBox:
      for (int j = 0; j < d; ++j) xi[j] = model.h * (2.0 * rng.next_double() - 1.0);
      break;
    case NoiseKind::kUniformCell: {
      Eigen::VectorXd u(d);
      for (int j = 0; j < d; ++j) u[j] = rng.next_double() - 0.5;
      xi = model.cell_basis * u;
      break;
    }
    case NoiseKind::kLaplace:
      for (int j = 0; j < d; ++j) {
        const double u = rng.next_double() - 0.5;
        xi[j] = u >= 0 ? -model.b * std::log1p(-2.0 * u)
                       : model.b * std::log1p(2.0 * u);
      }
      break;
    case NoiseKind::kPointMass:
      xi = model.v;
      break;
    case NoiseKind::kCauchy:
      for (int j = 0; j < d; ++j) {
        xi[j] = model.gamma * std::tan(M_PI * (rng.next_double() - 0.5));
      }
      break;
  }
  return xi;
}

double tail_quantile(const NoiseModel& model, double p) {
  if (!(p > 0) || !(p < 1)) throw Error("tail_quantile: p must be in (0,1)");
  const int d = model.dim;
  switch (model.kind) {
    case NoiseKind::kGaussian: {
      // |xi|^2 / sigma^2 is chi-square with d degrees of freedom;
      // Laurent-Massart: P(chi2_d >= d + 2 sqrt(d t) + 2 t) <= e^{-t}.
      const double t = std::log(1.0 / p);
      const double sigma2 = model.a / 2.0;
      return std::sqrt(sigma2 * (d + 2.0 * std::sqrt(d * t) + 2.0 * t));
    }
    case NoiseKind::kUniformBox:
      return model.h * std::sqrt(static_cast<double>(d));
    case NoiseKind::kUniformCell: {
      // Half diameter of the cell: max |B s| / 2 over sign vectors s.
      double best = 0;
      for (std::uint64_t mask = 0; mask < (std::uint64_t{1} << d); ++mask) {
        Eigen::VectorXd s(d);
        for (int j = 0; j < d; ++j) s[j] = (mask >> j) & 1 ? 1.0 : -1.0;
        best = std::max(best, (model.cell_basis * s).norm());
      }
      return best / 2.0;
    }
    case NoiseKind::kLaplace:
      // Union bound over coordinates: P(|xi_j| > x) = e^{-x/b}.
      return model.b * std::sqrt(static_cast<double>(d)) *
             std::log(static_cast<double>(d) / p);
    case NoiseKind::kPointMass:
      return model.v.norm();
    case NoiseKind::kCauchy: {
      // Union bound with the exact per-coordinate tail
      // P(|xi_j| > x) = (2/pi) atan(gamma/x). Grows like d*gamma/p; the
      // sampler caps the slack it derives from this.
      const double q = std::tan(M_PI * p / (2.0 * d));
      return model.gamma * std::sqrt(static_cast<double>(d)) / q;
    }
  }
  return 0;
}

}  // namespace lattice_echo
