#include "lattice_echo/spectral.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/parallel.hpp"

namespace lattice_echo {

namespace {

using Complex = std::complex<double>;

std::int64_t power(int base, int exp) {
  std::int64_t n = 1;
  for (int i = 0; i < exp; ++i) n *= base;
  return n;
}

}  // namespace

double DensityMeasure::mass() const {
  double total = 0;
  for (double v : density) total += v;
  return total * cell_volume;
}

DensityMeasure periodogram_density(std::span<const std::complex<double>> u,
                                   std::span<const std::int32_t> coeffs,
                                   const LatticeSpec& lat, double R, int grid_n) {
  const int d = lat.dim;
  if (grid_n < 2) throw Error("periodogram_density: grid_n must be >= 2");
  if (coeffs.size() != u.size() * static_cast<std::size_t>(d)) {
    throw LengthMismatch("periodogram_density: coeffs/u size mismatch");
  }
  DensityMeasure m;
  m.dim = d;
  m.grid_n = grid_n;
  m.cell_volume = 1.0 / (lat.covolume * static_cast<double>(power(grid_n, d)));
  const std::int64_t nodes = power(grid_n, d);
  m.density.assign(nodes, 0.0);

  // Roots-of-unity table: e(j/grid_n) for j in [0, grid_n). Node factors
  // are exact lookups since the point coefficients are integers.
  std::vector<Complex> omega(grid_n);
  for (int j = 0; j < grid_n; ++j) {
    const double ang = 2.0 * M_PI * static_cast<double>(j) / grid_n;
    omega[j] = {std::cos(ang), std::sin(ang)};
  }
  auto wrap = [grid_n](std::int64_t z) {
    std::int64_t r = z % grid_n;
    return static_cast<int>(r < 0 ? r + grid_n : r);
  };

  const double inv_vol = 1.0 / ball_volume(d, R);
  const std::int64_t n_rows = power(grid_n, d - 1);
  const std::int64_t rows_per_chunk =
      std::max<std::int64_t>(1, 8192 / grid_n);
  const std::int64_t nchunks = (n_rows + rows_per_chunk - 1) / rows_per_chunk;

  parallel_chunks(nchunks, [&](std::int64_t chunk) {
    const std::int64_t row0 = chunk * rows_per_chunk;
    const std::int64_t row1 = std::min(n_rows, row0 + rows_per_chunk);
    std::vector<double> acc_re((row1 - row0) * grid_n, 0.0);
    std::vector<double> acc_im((row1 - row0) * grid_n, 0.0);
    std::vector<double> u_re(grid_n), u_im(grid_n);
    std::vector<int> row_index(std::max(0, d - 1));
    for (std::size_t p = 0; p < u.size(); ++p) {
      const std::int32_t* z = coeffs.data() + p * d;
      const int step_last = wrap(z[d - 1]);
      int idx = 0;
      for (int j = 0; j < grid_n; ++j) {
        u_re[j] = omega[idx].real();
        u_im[j] = omega[idx].imag();
        idx += step_last;
        if (idx >= grid_n) idx -= grid_n;
      }
      for (std::int64_t row = row0; row < row1; ++row) {
        std::int64_t rem = row;
        for (int a = d - 2; a >= 0; --a) {
          row_index[a] = static_cast<int>(rem % grid_n);
          rem /= grid_n;
        }
        Complex lead = u[p];
        for (int a = 0; a + 1 < d; ++a) {
          lead *= omega[static_cast<int>(
              (static_cast<std::int64_t>(wrap(z[a])) * row_index[a]) % grid_n)];
        }
        const double cr = lead.real(), ci = lead.imag();
        double* __restrict__ out_re = acc_re.data() + (row - row0) * grid_n;
        double* __restrict__ out_im = acc_im.data() + (row - row0) * grid_n;
        const double* __restrict__ vr = u_re.data();
        const double* __restrict__ vi = u_im.data();
        for (int j = 0; j < grid_n; ++j) {
          out_re[j] += cr * vr[j] - ci * vi[j];
          out_im[j] += cr * vi[j] + ci * vr[j];
        }
      }
    }
    for (std::int64_t i = 0; i < static_cast<std::int64_t>(acc_re.size()); ++i) {
      m.density[row0 * grid_n + i] =
          (acc_re[i] * acc_re[i] + acc_im[i] * acc_im[i]) * inv_vol;
    }
  });
  return m;
}

double periodogram_density_at(std::span<const std::complex<double>> u,
                              std::span<const std::int32_t> coeffs,
                              const LatticeSpec& lat, double R,
                              const Eigen::VectorXd& t) {
  const int d = lat.dim;
  Complex s = 0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    double phase = 0;
    for (int j = 0; j < d; ++j) {
      phase += static_cast<double>(coeffs[p * d + j]) * t[j];
    }
    phase -= std::rint(phase);
    const double ang = 2.0 * M_PI * phase;
    s += u[p] * Complex{std::cos(ang), std::sin(ang)};
  }
  return std::norm(s) / ball_volume(d, R);
}

std::complex<double> measure_fourier_coeff(const DensityMeasure& m,
                                           const LatticePoint& k) {
  const int d = m.dim;
  if (k.coeffs.size() != d) throw DimensionMismatch("measure_fourier_coeff: k");
  Complex s = 0;
  for (std::int64_t flat = 0; flat < m.num_nodes(); ++flat) {
    double phase = 0;
    std::int64_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      phase += static_cast<double>(k.coeffs[a]) *
               (static_cast<double>(rem % m.grid_n) / m.grid_n);
      rem /= m.grid_n;
    }
    phase -= std::rint(phase);
    // e(+<k,x>) weight: for periodograms this picks out the windowed
    // correlation sum u(n) conj(u(n+k)).
    const double ang = 2.0 * M_PI * phase;
    s += m.density[flat] * Complex{std::cos(ang), std::sin(ang)};
  }
  return s * m.cell_volume;
}

double hellinger_affinity(const DensityMeasure& mu, const DensityMeasure& nu) {
  if (mu.dim != nu.dim || mu.grid_n != nu.grid_n ||
      mu.cell_volume != nu.cell_volume) {
    throw GridMismatch("hellinger_affinity: measures on different grids");
  }
  double s = 0;
  for (std::int64_t i = 0; i < mu.num_nodes(); ++i) {
    s += std::sqrt(mu.density[i] * nu.density[i]);
  }
  return s * mu.cell_volume;
}

void write_measure_csv(std::ostream& os, const DensityMeasure& m) {
  const int d = m.dim;
  for (int j = 0; j < d; ++j) os << "x_" << j + 1 << ",";
  os << "density\n";
  char buf[32];
  for (std::int64_t flat = 0; flat < m.num_nodes(); ++flat) {
    std::int64_t rem = flat;
    double coords[16];
    for (int a = d - 1; a >= 0; --a) {
      coords[a] = static_cast<double>(rem % m.grid_n) / m.grid_n;
      rem /= m.grid_n;
    }
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", coords[j]);
      os << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", m.density[flat]);
    os << buf << "\n";
  }
}

}  // namespace lattice_echo
