#include "lattice_echo/recovery.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include <json.hpp>

#include "lattice_echo/errors.hpp"
#include "lattice_echo/parallel.hpp"

namespace lattice_echo {

namespace {

using Complex = std::complex<double>;

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (int i = 0; i < a.size(); ++i) {
    if (a[i] != b[i]) return a[i] < b[i];
  }
  return false;
}

// (squared norm, lex) ordering used wherever peak lists need a
// deterministic order.
bool peak_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  const double na = a.squaredNorm(), nb = b.squaredNorm();
  if (na != nb) return na < nb;
  return lex_less(a, b);
}

}  // namespace

std::vector<ThresholdPeak> threshold_set(const ExpSumField& field, double beta) {
  if (!(beta > 0 && beta < 1)) throw Error("threshold_set: beta must be in (0,1)");
  const std::int64_t nodes = field.grid.num_nodes();
  const int d = field.grid.dim();

  std::vector<std::int64_t> passing;
  for (std::int64_t i = 0; i < nodes; ++i) {
    if (field.values[i].real() > beta) passing.push_back(i);
  }
  if (passing.empty()) return {};

  std::unordered_map<std::int64_t, std::int64_t> slot;
  slot.reserve(passing.size() * 2);
  for (std::size_t s = 0; s < passing.size(); ++s) slot[passing[s]] = s;

  std::vector<std::int64_t> parent(passing.size());
  for (std::size_t s = 0; s < parent.size(); ++s) parent[s] = s;
  std::function<std::int64_t(std::int64_t)> find = [&](std::int64_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };

  std::vector<std::int64_t> stride(d, 1);
  for (int a = d - 2; a >= 0; --a) stride[a] = stride[a + 1] * field.grid.counts[a + 1];

  for (std::size_t s = 0; s < passing.size(); ++s) {
    const std::int64_t flat = passing[s];
    std::int64_t rem = flat;
    for (int a = d - 1; a >= 0; --a) {
      const std::int64_t coord = rem % field.grid.counts[a];
      rem /= field.grid.counts[a];
      if (coord + 1 < field.grid.counts[a]) {
        auto it = slot.find(flat + stride[a]);
        if (it != slot.end()) parent[find(s)] = find(it->second);
      }
    }
  }

  std::unordered_map<std::int64_t, std::int64_t> best;  // root -> node
  for (std::size_t s = 0; s < passing.size(); ++s) {
    const std::int64_t root = find(s);
    auto it = best.find(root);
    if (it == best.end() ||
        field.values[passing[s]].real() > field.values[it->second].real()) {
      if (it == best.end()) {
        best[root] = passing[s];
      } else {
        it->second = passing[s];
      }
    }
  }
  std::vector<std::int64_t> reps;
  for (const auto& [root, node] : best) reps.push_back(node);
  std::sort(reps.begin(), reps.end());

  std::vector<ThresholdPeak> out;
  out.reserve(reps.size());
  for (std::int64_t node : reps) {
    out.push_back({field.grid.node(node), field.values[node]});
  }
  return out;
}

RefinedPeak refine_peak(const WindowView& win, const Eigen::VectorXd& lambda0,
                        double tol, double step) {
  const int d = lambda0.size();
  Eigen::VectorXd x = lambda0;
  Complex value0 = exp_sum(win, x);
  double f0 = std::abs(value0);
  bool saw_structure = false;
  double h = step;
  int passes = 0;
  while (h >= tol && passes < 64) {
    ++passes;
    for (int a = 0; a < d; ++a) {
      Eigen::VectorXd xm = x, xp = x;
      xm[a] -= h;
      xp[a] += h;
      const double fm = std::abs(exp_sum(win, xm));
      const double fp = std::abs(exp_sum(win, xp));
      const double denom = fm - 2.0 * f0 + fp;
      double delta;
      if (denom < 0) {
        delta = std::clamp(0.5 * h * (fm - fp) / denom, -h, h);
        saw_structure = true;
      } else if (fm > f0 || fp > f0) {
        delta = fp > fm ? h : -h;
      } else {
        continue;
      }
      if (delta == 0) continue;
      x[a] += delta;
      const Complex v = exp_sum(win, x);
      if (std::abs(v) >= f0) {
        value0 = v;
        f0 = std::abs(v);
      } else {
        x[a] -= delta;  // interpolation overshot into noise; keep the center
      }
    }
    h /= 2.0;
  }
  if (!saw_structure && f0 <= std::abs(exp_sum(win, lambda0))) {
    return {lambda0, exp_sum(win, lambda0), false};
  }
  return {x, value0, true};
}

RefinedPeak refine_peak(const Realization& r, double R,
                        const Eigen::VectorXd& lambda0, double tol, double step) {
  if (step <= 0) step = 0.25 / R;
  return refine_peak(make_window_view(r, R), lambda0, tol, step);
}

Eigen::MatrixXd extract_dual_basis(const std::vector<Eigen::VectorXd>& peaks,
                                   int dim, double coverage_tol,
                                   double origin_tol) {
  std::vector<Eigen::VectorXd> pts;
  for (const auto& p : peaks) {
    if (p.norm() > origin_tol) pts.push_back(p);
  }
  if (static_cast<int>(pts.size()) < dim) {
    throw RankDeficient("extract_dual_basis: fewer than d non-origin peaks");
  }
  std::sort(pts.begin(), pts.end(), peak_less);

  // Greedy shortest independent set; ties already broken lexicographically
  // by the sort. The independence margin (5% of the peak norm) must exceed
  // the localization noise of detected peaks, or a noisy multiple of a
  // chosen generator masquerades as a new direction.
  Eigen::MatrixXd chosen(dim, 0);
  Eigen::MatrixXd ortho(dim, 0);
  for (const auto& p : pts) {
    if (chosen.cols() == dim) break;
    Eigen::VectorXd res = p;
    for (int j = 0; j < ortho.cols(); ++j) {
      res -= ortho.col(j).dot(p) * ortho.col(j);
    }
    if (res.norm() > 0.05 * p.norm()) {
      chosen.conservativeResize(dim, chosen.cols() + 1);
      chosen.col(chosen.cols() - 1) = p;
      ortho.conservativeResize(dim, ortho.cols() + 1);
      ortho.col(ortho.cols() - 1) = res.normalized();
    }
  }
  if (chosen.cols() < dim) {
    throw RankDeficient("extract_dual_basis: peaks span fewer than d directions");
  }

  const Eigen::MatrixXd inv = chosen.inverse();
  for (const auto& p : pts) {
    const Eigen::VectorXd c = inv * p;
    for (int j = 0; j < dim; ++j) {
      if (std::abs(c[j] - std::round(c[j])) > coverage_tol) {
        throw NotALattice("extract_dual_basis: peak is not an integer "
                          "combination of the chosen generators");
      }
    }
  }
  return reduce_basis(chosen);
}

namespace {

double wrap_to_pi(double x) {
  x = std::remainder(x, 2.0 * M_PI);
  return x;
}

}  // namespace

Eigen::VectorXd estimate_offset(const std::vector<ThresholdPeak>& peaks,
                                const LatticeSpec& dual, double beta,
                                bool fold_negative_phi) {
  const int d = dual.dim;
  const Eigen::MatrixXd primal = dual.dual_basis;  // dual of the dual
  const Eigen::MatrixXd to_coeffs = dual.basis.inverse();

  // Per-generator phases pin c modulo the primal lattice, because
  // <m_j, b_k> is the Kronecker pairing.
  Eigen::VectorXd t(d);
  for (int j = 0; j < d; ++j) {
    const ThresholdPeak* gen = nullptr;
    for (const auto& p : peaks) {
      const Eigen::VectorXd c = to_coeffs * p.lambda;
      Eigen::VectorXd unit = Eigen::VectorXd::Zero(d);
      unit[j] = 1.0;
      if ((c - unit).lpNorm<Eigen::Infinity>() < 0.1) {
        gen = &p;
        break;
      }
    }
    if (gen == nullptr || std::abs(gen->value) <= 2.0 * beta) {
      throw PhaseUnidentifiable(
          "estimate_offset: generator peak missing or too weak");
    }
    double phase = -std::arg(gen->value);  // = 2*pi*<m_j, c> (mod 2*pi)
    if (fold_negative_phi) phase = std::remainder(phase, M_PI);
    double tj = phase / (2.0 * M_PI);
    tj -= std::floor(tj);
    t[j] = tj;
  }
  Eigen::VectorXd c = primal * t;

  // Wrapped-phase weighted least squares over all non-origin peaks.
  for (int iter = 0; iter < 20; ++iter) {
    Eigen::MatrixXd normal = Eigen::MatrixXd::Zero(d, d);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(d);
    for (const auto& p : peaks) {
      if (p.lambda.norm() < 1e-9) continue;
      const double w = std::norm(p.value);
      double r = std::arg(p.value) + 2.0 * M_PI * p.lambda.dot(c);
      r = fold_negative_phi ? std::remainder(r, M_PI) : wrap_to_pi(r);
      const Eigen::VectorXd g = 2.0 * M_PI * p.lambda;
      normal += w * g * g.transpose();
      rhs -= w * r * g;
    }
    const Eigen::VectorXd delta = normal.ldlt().solve(rhs);
    c += delta;
    if (delta.norm() < 1e-13) break;
  }

  // Representative in the primal fundamental cell.
  Eigen::VectorXd tc = primal.inverse() * c;
  for (int j = 0; j < d; ++j) tc[j] -= std::floor(tc[j]);
  return primal * tc;
}

double estimate_dispersion(const std::vector<ThresholdPeak>& peaks) {
  double sxy = 0, sxx = 0;
  int used = 0;
  for (const auto& p : peaks) {
    const double mag = std::abs(p.value);
    if (p.lambda.norm() < 1e-9 || mag <= 0) continue;
    const double x = M_PI * M_PI * p.lambda.squaredNorm();
    const double y = -std::log(mag);
    const double w = mag * mag;
    sxy += w * x * y;
    sxx += w * x * x;
    ++used;
  }
  if (used < 2) {
    throw InsufficientPeaks("estimate_dispersion: need >= 2 non-origin peaks");
  }
  return sxy / sxx;
}

std::vector<double> dispersion_residuals(const std::vector<ThresholdPeak>& peaks,
                                         double a) {
  std::vector<double> res;
  for (const auto& p : peaks) {
    if (p.lambda.norm() < 1e-9) continue;
    const double model = std::exp(-a * M_PI * M_PI * p.lambda.squaredNorm());
    res.push_back(std::abs(std::abs(p.value) - model));
  }
  return res;
}

RecoveryReport recover_lattice(const Realization& r, const RecoveryParams& params) {
  if (params.R_verify > r.gen_radius()) {
    throw RadiusExceedsWindow("recover_lattice: R_verify exceeds the window");
  }
  const int d = r.dim();
  RecoveryReport report;
  report.dim = d;
  report.beta = params.beta;
  report.R_detect = params.R_detect;
  report.R_verify = params.R_verify;
  report.seed = r.seed();
  report.offset = Eigen::VectorXd::Zero(d);
  report.dual_basis = Eigen::MatrixXd::Zero(d, d);
  report.primal_basis = Eigen::MatrixXd::Zero(d, d);

  // Stage 1: coarse scan at R_detect. Detection thresholds the modulus so
  // an unknown offset (which only rotates peak phases) cannot hide peaks.
  const double spacing =
      params.spacing > 0 ? params.spacing : 1.0 / (3.0 * params.R_detect);
  const GridSpec grid = make_box_grid(d, params.box_lo, params.box_hi, spacing);
  ExpSumField field = exp_sum_grid(r, params.R_detect, grid);
  ExpSumField abs_field = field;
  for (auto& v : abs_field.values) v = Complex{std::abs(v), 0.0};

  // Stage 2: threshold and cluster.
  const std::vector<ThresholdPeak> detections =
      threshold_set(abs_field, params.beta_detect);

  // Stage 3: sub-grid refinement at R_detect.
  const WindowView detect_win = make_window_view(r, params.R_detect);
  std::vector<RefinedPeak> refined;
  for (const auto& det : detections) {
    const RefinedPeak p =
        refine_peak(detect_win, det.lambda, params.refine_tol, spacing / 2.0);
    if (p.refined) refined.push_back(p);
  }

  // The disk window's kernel has sidelobe rings (relative amplitude 0.132,
  // 0.064, ... out to ~3/R) that clear beta_detect near strong peaks; keep
  // only the strongest peak per guard ball.
  std::sort(refined.begin(), refined.end(),
            [](const RefinedPeak& a, const RefinedPeak& b) {
              const double ma = std::abs(a.value), mb = std::abs(b.value);
              if (ma != mb) return ma > mb;
              return lex_less(a.lambda, b.lambda);
            });
  const double guard = 3.0 / params.R_detect;
  std::vector<RefinedPeak> kept;
  for (const auto& p : refined) {
    bool masked = false;
    for (const auto& q : kept) masked |= (p.lambda - q.lambda).norm() < guard;
    if (!masked) kept.push_back(p);
  }

  const double origin_tol = 10.0 * params.refine_tol;
  bool any_nonzero = false;
  for (const auto& p : kept) any_nonzero |= p.lambda.norm() > origin_tol;
  if (!any_nonzero) {
    // No periodic structure above the detection floor: the cloaked case.
    report.cloaked = true;
    const WindowView verify_win = make_window_view(r, params.R_verify);
    const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
    report.peaks.push_back({zero, exp_sum(verify_win, zero), params.R_verify});
    report.verified_count = 1;
    return report;
  }

  // Stage 4: provisional dual basis from the refined detections. An
  // isolated noise exceedance at the detection floor would poison the
  // integer-span check, so up to three non-integral stragglers are shed
  // weakest-first; chronic inconsistency still fails loudly.
  Eigen::MatrixXd provisional;
  for (int drops = 0;; ++drops) {
    std::vector<Eigen::VectorXd> locations;
    for (const auto& p : kept) locations.push_back(p.lambda);
    try {
      provisional = extract_dual_basis(locations, d, 0.02, origin_tol);
      break;
    } catch (const NotALattice&) {
      if (drops >= 3 || kept.size() <= static_cast<std::size_t>(d)) throw;
      kept.pop_back();  // kept is sorted by strength
    }
  }
  const LatticeSpec provisional_dual = make_lattice(provisional);

  // Stage 5: candidate dual points within the target ball.
  const double target_radius =
      params.target_radius > 0
          ? params.target_radius
          : std::min(std::abs(params.box_lo), std::abs(params.box_hi));
  std::vector<LatticePoint> candidates =
      points_in_ball(provisional_dual, target_radius);

  // Pair each candidate with its negation; conjugate symmetry makes the
  // pair a single measurement, and keeps the verified set closed under
  // negation.
  std::vector<const LatticePoint*> pair_reps;
  const Eigen::VectorXd zero = Eigen::VectorXd::Zero(d);
  for (const auto& cand : candidates) {
    if (cand.position.norm() <= origin_tol) continue;
    if (lex_less(cand.position, zero)) continue;  // keep the lex-positive rep
    pair_reps.push_back(&cand);
  }

  // Stage 6: verify and refine each candidate pair at R_verify. The
  // threshold allows a 2-sigma measurement margin, sigma being the
  // 1/sqrt(vol(B_R)) fluctuation scale of M_R at a fixed frequency; at
  // finite R a peak with |phi| barely above beta is otherwise lost to
  // estimator noise about half the time.
  const WindowView verify_win = make_window_view(r, params.R_verify);
  const double sigma =
      std::sqrt(0.5 * r.lattice().covolume / ball_volume(d, params.R_verify));
  const double verify_threshold =
      std::max(params.beta - 2.0 * sigma, 0.5 * params.beta);

  std::vector<RefinedPeak> verified(pair_reps.size());
  std::vector<char> keep(pair_reps.size(), 0);
  parallel_chunks(static_cast<std::int64_t>(pair_reps.size()), [&](std::int64_t i) {
    RefinedPeak p = refine_peak(verify_win, pair_reps[i]->position,
                                params.refine_tol, 0.25 / params.R_verify);
    const Complex direct = exp_sum(verify_win, pair_reps[i]->position);
    if (std::abs(direct) > std::abs(p.value)) {
      p = {pair_reps[i]->position, direct, true};
    }
    verified[i] = p;
    keep[i] = std::abs(p.value) > verify_threshold ? 1 : 0;
  });

  std::vector<ThresholdPeak> verified_peaks;
  verified_peaks.push_back({zero, exp_sum(verify_win, zero)});
  for (std::size_t i = 0; i < pair_reps.size(); ++i) {
    if (!keep[i]) continue;
    verified_peaks.push_back({verified[i].lambda, verified[i].value});
    verified_peaks.push_back(
        {-verified[i].lambda, std::conj(verified[i].value)});
  }
  std::sort(verified_peaks.begin(), verified_peaks.end(),
            [](const ThresholdPeak& a, const ThresholdPeak& b) {
              return peak_less(a.lambda, b.lambda);
            });

  bool any_verified_nonzero = false;
  for (const auto& p : verified_peaks) {
    any_verified_nonzero |= p.lambda.norm() > origin_tol;
  }
  if (!any_verified_nonzero) {
    report.cloaked = true;
    for (const auto& p : verified_peaks) {
      report.peaks.push_back({p.lambda, p.value, params.R_verify});
    }
    report.verified_count = static_cast<int>(report.peaks.size());
    return report;
  }

  // Final basis from the verified peak locations, which carry far less
  // localization noise than the detection stage.
  std::vector<Eigen::VectorXd> verified_locations;
  for (const auto& p : verified_peaks) verified_locations.push_back(p.lambda);
  report.dual_basis = extract_dual_basis(verified_locations, d, 0.02, origin_tol);
  const LatticeSpec dual = make_lattice(report.dual_basis);
  report.primal_basis = dual.dual_basis;

  for (const auto& p : verified_peaks) {
    report.peaks.push_back({p.lambda, p.value, params.R_verify});
  }
  report.verified_count = static_cast<int>(report.peaks.size());

  // Stage 7: offset and dispersion.
  const bool fold = r.noise().kind == NoiseKind::kUniformBox ||
                    r.noise().kind == NoiseKind::kUniformCell;
  report.offset = estimate_offset(verified_peaks, dual, params.beta, fold);

  std::vector<ThresholdPeak> nonzero;
  for (const auto& p : verified_peaks) {
    if (p.lambda.norm() > origin_tol) nonzero.push_back(p);
  }
  if (nonzero.size() >= 2) {
    const double a = estimate_dispersion(nonzero);
    report.dispersion = a;
    report.residuals = dispersion_residuals(nonzero, a);
    double worst = 0;
    for (double res : report.residuals) worst = std::max(worst, res);
    report.dispersion_misfit = worst > 0.05;
  }
  return report;
}

std::string report_to_json(const RecoveryReport& report) {
  using json = nlohmann::ordered_json;
  json j;
  j["dim"] = report.dim;
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (int i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (int k = 0; k < m.cols(); ++k) row.push_back(m(i, k));
      rows.push_back(row);
    }
    return rows;
  };
  j["dual_basis"] = matrix(report.dual_basis);
  j["primal_basis"] = matrix(report.primal_basis);
  json offset = json::array();
  for (int i = 0; i < report.offset.size(); ++i) offset.push_back(report.offset[i]);
  j["offset"] = offset;
  if (report.dispersion) {
    j["dispersion"] = *report.dispersion;
  } else {
    j["dispersion"] = nullptr;
  }
  j["beta"] = report.beta;
  j["R_detect"] = report.R_detect;
  j["R_verify"] = report.R_verify;
  json peaks = json::array();
  for (const auto& p : report.peaks) {
    json lambda = json::array();
    for (int i = 0; i < p.lambda.size(); ++i) lambda.push_back(p.lambda[i]);
    peaks.push_back({{"lambda", lambda},
                     {"re", p.value.real()},
                     {"im", p.value.imag()},
                     {"radius", p.radius}});
  }
  j["peaks"] = peaks;
  j["verified_count"] = report.verified_count;
  j["cloaked"] = report.cloaked;
  j["seed"] = report.seed;
  return j.dump(2);
}

}  // namespace lattice_echo
