#include "lattice_echo/expsum.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/parallel.hpp"

namespace lattice_echo {

namespace {

using Complex = std::complex<double>;

// conj(e(t)) with the argument reduced to [-1/2, 1/2] before the trig
// calls; the reduction makes dual-lattice phases land on exact values.
inline Complex conj_e(double t) {
  const double f = t - std::rint(t);
  const double ang = 2.0 * M_PI * f;
  return {std::cos(ang), -std::sin(ang)};
}

// Binary-counter pairwise reduction. push() the block partials in their
// fixed order; the merge tree depends only on the number of blocks, never
// on the thread schedule.
template <typename T>
class PairwiseStack {
 public:
  void push(T value) {
    for (std::size_t level = 0;; ++level) {
      if (level == slots_.size()) {
        slots_.push_back(std::move(value));
        occupied_.push_back(true);
        return;
      }
      if (!occupied_[level]) {
        slots_[level] = std::move(value);
        occupied_[level] = true;
        return;
      }
      value = add(slots_[level], value);  // older + newer
      occupied_[level] = false;
    }
  }

  T finish(T zero) const {
    T total = zero;
    bool any = false;
    for (std::size_t level = 0; level < slots_.size(); ++level) {
      if (!occupied_[level]) continue;
      total = any ? add(slots_[level], total) : slots_[level];
      any = true;
    }
    return total;
  }

 private:
  static Complex add(const Complex& a, const Complex& b) { return a + b; }
  static std::vector<Complex> add(const std::vector<Complex>& a,
                                  std::vector<Complex> b) {
    for (std::size_t i = 0; i < b.size(); ++i) b[i] = a[i] + b[i];
    return b;
  }
  std::vector<T> slots_;
  std::vector<bool> occupied_;
};

Complex window_block_sum(const Realization& r,
                         std::span<const std::int64_t> idx,
                         const Eigen::VectorXd& lambda) {
  const int d = r.dim();
  Complex s = 0;
  for (std::int64_t i : idx) {
    const double* w = r.position(i);
    double t = 0;
    for (int j = 0; j < d; ++j) t += w[j] * lambda[j];
    s += conj_e(t);
  }
  return s;
}

}  // namespace

WindowView make_window_view(const Realization& r, double R) {
  WindowView w;
  w.realization = &r;
  w.R = R;
  w.idx = window_indices(r, R);
  w.norm_divisor = ball_volume(r.dim(), R) / r.lattice().covolume;
  return w;
}

std::complex<double> exp_sum(const WindowView& w, const Eigen::VectorXd& lambda) {
  const std::int64_t n = static_cast<std::int64_t>(w.idx.size());
  const std::int64_t nblocks = (n + kSumBlock - 1) / kSumBlock;
  PairwiseStack<Complex> stack;
  if (nblocks >= 64) {
    std::vector<Complex> partial(nblocks);
    parallel_chunks(nblocks, [&](std::int64_t b) {
      const std::int64_t lo = b * kSumBlock;
      const std::int64_t hi = std::min(n, lo + kSumBlock);
      partial[b] = window_block_sum(
          *w.realization, std::span(w.idx).subspan(lo, hi - lo), lambda);
    });
    for (std::int64_t b = 0; b < nblocks; ++b) stack.push(partial[b]);
  } else {
    for (std::int64_t b = 0; b < nblocks; ++b) {
      const std::int64_t lo = b * kSumBlock;
      const std::int64_t hi = std::min(n, lo + kSumBlock);
      stack.push(window_block_sum(*w.realization,
                                  std::span(w.idx).subspan(lo, hi - lo), lambda));
    }
  }
  return stack.finish(Complex{0, 0}) / w.norm_divisor;
}

std::complex<double> exp_sum(const Realization& r, double R,
                             const Eigen::VectorXd& lambda) {
  return exp_sum(make_window_view(r, R), lambda);
}

std::int64_t GridSpec::num_nodes() const {
  std::int64_t n = 1;
  for (int c : counts) n *= c;
  return n;
}

Eigen::VectorXd GridSpec::node(std::int64_t flat) const {
  const int d = dim();
  Eigen::VectorXd x(d);
  for (int a = d - 1; a >= 0; --a) {
    x[a] = origin[a] + spacing * static_cast<double>(flat % counts[a]);
    flat /= counts[a];
  }
  return x;
}

GridSpec make_box_grid(int dim, double lo, double hi, double spacing) {
  if (!(spacing > 0) || !(hi > lo)) {
    throw Error("make_box_grid: need hi > lo and spacing > 0");
  }
  GridSpec g;
  g.origin = Eigen::VectorXd::Constant(dim, lo);
  g.spacing = spacing;
  const int n = static_cast<int>(std::floor((hi - lo) / spacing + 1e-9)) + 1;
  g.counts.assign(dim, n);
  return g;
}

namespace {

// Fills u[i] = conj(e(step * i)) for i in [0, n) by complex recurrence,
// resynchronized with exact trig every 64 steps.
void fill_rotation_table(double step, std::int64_t n, Complex* u) {
  const Complex rot = conj_e(step);
  Complex cur{1.0, 0.0};
  for (std::int64_t i = 0; i < n; ++i) {
    if ((i & 63) == 0) cur = conj_e(step * static_cast<double>(i));
    u[i] = cur;
    cur *= rot;
  }
}

// Split-layout variant; the accumulation kernel keeps real and imaginary
// parts in separate arrays so the row update vectorizes.
void fill_rotation_table_split(double step, std::int64_t n, double* re,
                               double* im) {
  const Complex rot = conj_e(step);
  Complex cur{1.0, 0.0};
  for (std::int64_t i = 0; i < n; ++i) {
    if ((i & 63) == 0) cur = conj_e(step * static_cast<double>(i));
    re[i] = cur.real();
    im[i] = cur.imag();
    cur *= rot;
  }
}

}  // namespace

ExpSumField exp_sum_grid(const Realization& r, double R, const GridSpec& grid,
                         std::int64_t node_cap) {
  if (grid.dim() != r.dim()) throw DimensionMismatch("exp_sum_grid: grid dim");
  const std::int64_t nodes = grid.num_nodes();
  if (nodes > node_cap) {
    throw GridTooLarge("exp_sum_grid: " + std::to_string(nodes) +
                       " nodes exceed cap " + std::to_string(node_cap));
  }
  const WindowView win = make_window_view(r, R);
  const int d = grid.dim();
  const std::int64_t n_last = grid.counts[d - 1];
  std::int64_t n_rows = 1;
  for (int a = 0; a + 1 < d; ++a) n_rows *= grid.counts[a];

  ExpSumField field;
  field.R = R;
  field.grid = grid;
  field.norm_divisor = win.norm_divisor;
  field.seed = r.seed();
  field.values.assign(nodes, Complex{0, 0});

  const std::int64_t npts = static_cast<std::int64_t>(win.idx.size());
  const std::int64_t nblocks = (npts + kSumBlock - 1) / kSumBlock;
  // Chunk = a contiguous run of rows; fixed size, so the per-node merge
  // tree (sequential inside a 1024-point block, pairwise over blocks) is
  // the same as pointwise exp_sum for any worker count.
  const std::int64_t rows_per_chunk =
      std::max<std::int64_t>(1, 65536 / std::max<std::int64_t>(1, n_last));
  const std::int64_t nchunks = (n_rows + rows_per_chunk - 1) / rows_per_chunk;

  parallel_chunks(nchunks, [&](std::int64_t chunk) {
    const std::int64_t row0 = chunk * rows_per_chunk;
    const std::int64_t row1 = std::min(n_rows, row0 + rows_per_chunk);
    const std::int64_t chunk_nodes = (row1 - row0) * n_last;

    std::vector<double> acc_re(chunk_nodes), acc_im(chunk_nodes);
    std::vector<double> u_re(n_last), u_im(n_last);
    std::vector<std::vector<Complex>> u_lead(d - 1);
    for (int a = 0; a + 1 < d; ++a) u_lead[a].resize(grid.counts[a]);
    std::vector<std::int64_t> row_index(std::max(0, d - 1));
    std::vector<Complex> scratch(chunk_nodes);
    PairwiseStack<std::vector<Complex>> stack;

    for (std::int64_t b = 0; b < nblocks; ++b) {
      std::fill(acc_re.begin(), acc_re.end(), 0.0);
      std::fill(acc_im.begin(), acc_im.end(), 0.0);
      const std::int64_t lo = b * kSumBlock;
      const std::int64_t hi = std::min(npts, lo + kSumBlock);
      for (std::int64_t t = lo; t < hi; ++t) {
        const double* w = r.position(win.idx[t]);
        double t0 = 0;
        for (int j = 0; j < d; ++j) t0 += w[j] * grid.origin[j];
        const Complex base = conj_e(t0);
        fill_rotation_table_split(grid.spacing * w[d - 1], n_last, u_re.data(),
                                  u_im.data());
        for (int a = 0; a + 1 < d; ++a) {
          fill_rotation_table(grid.spacing * w[a], grid.counts[a],
                              u_lead[a].data());
        }
        for (std::int64_t row = row0; row < row1; ++row) {
          std::int64_t rem = row;
          for (int a = d - 2; a >= 0; --a) {
            row_index[a] = rem % grid.counts[a];
            rem /= grid.counts[a];
          }
          Complex coeff = base;
          for (int a = 0; a + 1 < d; ++a) coeff *= u_lead[a][row_index[a]];
          const double cr = coeff.real(), ci = coeff.imag();
          double* __restrict__ out_re = acc_re.data() + (row - row0) * n_last;
          double* __restrict__ out_im = acc_im.data() + (row - row0) * n_last;
          const double* __restrict__ vr = u_re.data();
          const double* __restrict__ vi = u_im.data();
          for (std::int64_t j = 0; j < n_last; ++j) {
            out_re[j] += cr * vr[j] - ci * vi[j];
            out_im[j] += cr * vi[j] + ci * vr[j];
          }
        }
      }
      for (std::int64_t i = 0; i < chunk_nodes; ++i) {
        scratch[i] = Complex{acc_re[i], acc_im[i]};
      }
      stack.push(scratch);
    }
    const std::vector<Complex> total =
        stack.finish(std::vector<Complex>(chunk_nodes, Complex{0, 0}));
    for (std::int64_t i = 0; i < chunk_nodes; ++i) {
      field.values[row0 * n_last + i] = total[i] / win.norm_divisor;
    }
  });
  return field;
}

std::vector<std::pair<double, std::complex<double>>> radius_sweep(
    const Realization& r, std::vector<double> radii,
    const Eigen::VectorXd& lambda) {
  std::sort(radii.begin(), radii.end());
  if (!radii.empty() && radii.back() > r.gen_radius()) {
    throw RadiusExceedsWindow("radius_sweep: max radius exceeds window");
  }
  WindowView win = make_window_view(r, radii.empty() ? 0.0 : radii.back());
  std::sort(win.idx.begin(), win.idx.end(), [&](std::int64_t a, std::int64_t b) {
    if (r.norm2_w(a) != r.norm2_w(b)) return r.norm2_w(a) < r.norm2_w(b);
    return a < b;
  });

  // Neumaier-compensated running sums keep the incremental path within
  // 1e-10 of the direct pairwise evaluation at every snapshot.
  double s_re = 0, c_re = 0, s_im = 0, c_im = 0;
  auto add = [](double& s, double& c, double x) {
    const double t = s + x;
    c += std::abs(s) >= std::abs(x) ? (s - t) + x : (x - t) + s;
    s = t;
  };

  const int d = r.dim();
  std::vector<std::pair<double, Complex>> out;
  std::size_t next = 0;
  for (double radius : radii) {
    const double R2 = radius * radius;
    for (; next < win.idx.size() && r.norm2_w(win.idx[next]) <= R2; ++next) {
      const double* w = r.position(win.idx[next]);
      double t = 0;
      for (int j = 0; j < d; ++j) t += w[j] * lambda[j];
      const Complex term = conj_e(t);
      add(s_re, c_re, term.real());
      add(s_im, c_im, term.imag());
    }
    const double divisor = ball_volume(d, radius) / r.lattice().covolume;
    out.emplace_back(radius, Complex{s_re + c_re, s_im + c_im} / divisor);
  }
  return out;
}

CorrelationEstimate wiener_correlation(const Realization& r,
                                       const Eigen::VectorXd& lambda,
                                       const LatticePoint& k, double R) {
  if (k.position.norm() + R > r.gen_radius()) {
    throw RadiusExceedsWindow("wiener_correlation: |k| + R exceeds window");
  }
  const int d = r.dim();
  const Complex phi = char_fn(r.noise(), lambda);
  const double R2 = R * R;

  auto a_term = [&](std::int64_t i) {
    const Eigen::VectorXd xi = r.noise_vector(i);
    double t = 0;
    for (int j = 0; j < d; ++j) t += xi[j] * lambda[j];
    return conj_e(t) - phi;
  };

  PairwiseStack<Complex> stack;
  Complex block = 0;
  int in_block = 0;
  Eigen::VectorXi shifted(d);
  for (std::int64_t i = 0; i < r.size(); ++i) {
    if (r.norm2_n(i) > R2) continue;
    for (int j = 0; j < d; ++j) shifted[j] = r.coeffs(i)[j] + k.coeffs[j];
    const auto other = r.find(shifted);
    if (!other) {
      throw RadiusExceedsWindow("wiener_correlation: shifted point outside window");
    }
    block += a_term(i) * std::conj(a_term(*other));
    if (++in_block == kSumBlock) {
      stack.push(block);
      block = 0;
      in_block = 0;
    }
  }
  if (in_block > 0) stack.push(block);

  CorrelationEstimate est;
  est.lambda = lambda;
  est.k_coeffs = k.coeffs;
  est.R = R;
  est.value = stack.finish(Complex{0, 0}) / ball_volume(d, R);
  return est;
}

std::complex<double> cross_correlation(std::span<const std::complex<double>> u,
                                       std::span<const std::complex<double>> v,
                                       double R, int dim) {
  if (u.size() != v.size()) {
    throw LengthMismatch("cross_correlation: sequence lengths differ");
  }
  PairwiseStack<Complex> stack;
  for (std::size_t lo = 0; lo < u.size(); lo += kSumBlock) {
    const std::size_t hi = std::min(u.size(), lo + kSumBlock);
    Complex s = 0;
    for (std::size_t i = lo; i < hi; ++i) s += u[i] * std::conj(v[i]);
    stack.push(s);
  }
  return stack.finish(Complex{0, 0}) / ball_volume(dim, R);
}

void write_field_csv(std::ostream& os, const ExpSumField& field) {
  const int d = field.grid.dim();
  for (int j = 0; j < d; ++j) os << "lambda_" << j + 1 << ",";
  os << "re,im\n";
  char buf[32];
  for (std::int64_t i = 0; i < field.grid.num_nodes(); ++i) {
    const Eigen::VectorXd x = field.grid.node(i);
    for (int j = 0; j < d; ++j) {
      std::snprintf(buf, sizeof(buf), "%.17g", x[j]);
      os << buf << ",";
    }
    std::snprintf(buf, sizeof(buf), "%.17g", field.values[i].real());
    os << buf << ",";
    std::snprintf(buf, sizeof(buf), "%.17g", field.values[i].imag());
    os << buf << "\n";
  }
}

ExpSumField load_field_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw ParseError(1, "empty field CSV");
  int d = 0;
  {
    std::stringstream header(line);
    std::string col;
    while (std::getline(header, col, ',')) {
      if (col.rfind("lambda_", 0) == 0) ++d;
    }
    if (d == 0) throw ParseError(1, "field CSV header has no lambda columns");
  }
  std::vector<Eigen::VectorXd> nodes;
  std::vector<Complex> values;
  int lineno = 1;
  while (std::getline(is, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Eigen::VectorXd x(d);
    double re = 0, im = 0;
    for (int j = 0; j < d + 2; ++j) {
      if (!std::getline(ss, cell, ',')) throw ParseError(lineno, "short row");
      const double val = std::strtod(cell.c_str(), nullptr);
      if (j < d) {
        x[j] = val;
      } else if (j == d) {
        re = val;
      } else {
        im = val;
      }
    }
    nodes.push_back(x);
    values.emplace_back(re, im);
  }
  if (nodes.empty()) throw ParseError(lineno, "field CSV has no data rows");

  ExpSumField field;
  field.values = std::move(values);
  GridSpec& g = field.grid;
  g.origin = nodes.front();
  g.counts.assign(d, 1);
  // Reconstruct the row-major grid shape: axis a's count is the number of
  // distinct values it cycles through.
  for (int a = 0; a < d; ++a) {
    std::map<double, int> uniq;
    for (const auto& x : nodes) uniq.emplace(x[a], 0);
    g.counts[a] = static_cast<int>(uniq.size());
    for (const auto& [val, _] : uniq) g.origin[a] = std::min(g.origin[a], val);
  }
  std::int64_t total = 1;
  for (int c : g.counts) total *= c;
  if (total != static_cast<std::int64_t>(nodes.size())) {
    throw ParseError(lineno, "field CSV rows do not form a full grid");
  }
  g.spacing = 0;
  for (int a = d - 1; a >= 0; --a) {
    if (g.counts[a] > 1) {
      // consecutive distinct values along the fastest such axis
      std::map<double, int> uniq;
      for (const auto& x : nodes) uniq.emplace(x[a], 0);
      auto it = uniq.begin();
      const double first = it->first;
      ++it;
      g.spacing = it->first - first;
      break;
    }
  }
  for (std::int64_t i = 0; i < total; ++i) {
    if ((g.node(i) - nodes[i]).lpNorm<Eigen::Infinity>() >
        1e-9 * std::max(1.0, std::abs(g.spacing))) {
      throw ParseError(0, "field CSV rows are not in row-major grid order");
    }
  }
  return field;
}

}  // namespace lattice_echo
