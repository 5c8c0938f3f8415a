// lattice-echo: simulate randomly perturbed lattices, scan the exponential
// sum M_R over frequency grids, recover the lattice from one realization,
// and run the numerical lemma suites. See README.md for the config format.

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "lattice_echo/config.hpp"
#include "lattice_echo/diagnostics.hpp"
#include "lattice_echo/errors.hpp"
#include "lattice_echo/expsum.hpp"
#include "lattice_echo/parallel.hpp"
#include "lattice_echo/realization.hpp"
#include "lattice_echo/recovery.hpp"

namespace {

using namespace lattice_echo;

struct CommonArgs {
  std::string config_path;
  std::string out_path;
  std::optional<std::uint64_t> seed;
  std::optional<int> workers;
  std::optional<double> radius;
  std::optional<std::pair<double, double>> box;
  std::optional<double> spacing;
  std::optional<double> beta;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
  cmd->add_option("--config", args.config_path, "config file (key = value)")
      ->required();
  cmd->add_option("--out", args.out_path, "output path");
  cmd->add_option("--seed", args.seed, "override config seed");
  cmd->add_option("--workers", args.workers, "worker thread cap");
  cmd->add_option("--radius", args.radius, "override the subcommand radius");
  cmd->add_option(
         "--box",
         [&args](const std::vector<std::string>& vals) {
           double lo, hi;
           if (std::sscanf(vals[0].c_str(), "%lf,%lf", &lo, &hi) != 2) return false;
           args.box = {lo, hi};
           return true;
         },
         "grid box as lo,hi")
      ->expected(1);
  cmd->add_option("--spacing", args.spacing, "override grid spacing");
  cmd->add_option("--beta", args.beta, "override threshold beta");
}

RunConfig load(const CommonArgs& args) {
  RunConfig config = load_config_file(args.config_path);
  if (args.seed) config.seed = *args.seed;
  int workers = config.workers;
  if (const char* env = std::getenv("LATTICE_ECHO_WORKERS");
      env != nullptr && workers == 0) {
    workers = std::atoi(env);
  }
  if (args.workers) workers = *args.workers;
  set_worker_count(workers);
  return config;
}

std::ofstream open_out(const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open output file: " + path);
  return out;
}

int run_simulate(const CommonArgs& args) {
  RunConfig config = load(args);
  const double R = args.radius.value_or(config.simulate_radius);
  const Realization real = realize(make_lattice(config.lattice),
                                   config.noise_model(), config.offset,
                                   config.seed, R);
  std::ofstream out = open_out(args.out_path.empty() ? "realization.csv"
                                                     : args.out_path);
  write_realization_csv(out, real, R);
  return 0;
}

int run_scan(const CommonArgs& args, const std::string& peaks_path) {
  RunConfig config = load(args);
  const double R = args.radius.value_or(config.scan_radius);
  const double lo = args.box ? args.box->first : config.scan_box_lo;
  const double hi = args.box ? args.box->second : config.scan_box_hi;
  const double spacing = args.spacing.value_or(config.scan_spacing);
  const Realization real = realize(make_lattice(config.lattice),
                                   config.noise_model(), config.offset,
                                   config.seed, R);
  const GridSpec grid = make_box_grid(config.dim(), lo, hi, spacing);
  const ExpSumField field = exp_sum_grid(real, R, grid);
  std::ofstream out = open_out(args.out_path.empty() ? "scan.csv" : args.out_path);
  write_field_csv(out, field);
  if (!peaks_path.empty()) {
    const double beta = args.beta.value_or(config.scan_beta);
    std::ofstream peaks_out = open_out(peaks_path);
    const int d = config.dim();
    for (int j = 0; j < d; ++j) peaks_out << "lambda_" << j + 1 << ",";
    peaks_out << "re,im\n";
    char buf[32];
    for (const ThresholdPeak& p : threshold_set(field, beta)) {
      for (int j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", p.lambda[j]);
        peaks_out << buf << ",";
      }
      std::snprintf(buf, sizeof(buf), "%.17g", p.value.real());
      peaks_out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", p.value.imag());
      peaks_out << buf << "\n";
    }
  }
  return 0;
}

int run_sweep(const CommonArgs& args) {
  RunConfig config = load(args);
  std::vector<double> radii = config.sweep_radii;
  if (args.radius) radii = {*args.radius};
  double max_R = 0;
  for (double r : radii) max_R = std::max(max_R, r);
  const Realization real = realize(make_lattice(config.lattice),
                                   config.noise_model(), config.offset,
                                   config.seed, max_R);
  std::ofstream out = open_out(args.out_path.empty() ? "sweep.csv" : args.out_path);
  const int d = config.dim();
  for (int j = 0; j < d; ++j) out << "lambda_" << j + 1 << ",";
  out << "R,re,im\n";
  char buf[32];
  for (const Eigen::VectorXd& lambda : config.sweep_lambdas) {
    for (const auto& [R, value] : radius_sweep(real, radii, lambda)) {
      for (int j = 0; j < d; ++j) {
        std::snprintf(buf, sizeof(buf), "%.17g", lambda[j]);
        out << buf << ",";
      }
      std::snprintf(buf, sizeof(buf), "%.17g", R);
      out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", value.real());
      out << buf << ",";
      std::snprintf(buf, sizeof(buf), "%.17g", value.imag());
      out << buf << "\n";
    }
  }
  return 0;
}

int run_recover(const CommonArgs& args) {
  RunConfig config = load(args);
  RecoveryParams params = config.recover;
  if (args.beta) params.beta = *args.beta;
  if (args.spacing) params.spacing = *args.spacing;
  if (args.box) {
    params.box_lo = args.box->first;
    params.box_hi = args.box->second;
  }
  const Realization real = realize(make_lattice(config.lattice),
                                   config.noise_model(), config.offset,
                                   config.seed, params.R_verify);
  const RecoveryReport report = recover_lattice(real, params);
  std::ofstream out =
      open_out(args.out_path.empty() ? "report.json" : args.out_path);
  out << report_to_json(report) << "\n";
  return 0;
}

int run_verify_lemmas(const CommonArgs& args) {
  RunConfig config = load(args);
  const LemmaReport report = verify_lemmas(config);
  std::ofstream out =
      open_out(args.out_path.empty() ? "lemmas.json" : args.out_path);
  out << report.json << "\n";
  return report.pass ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"perturbed-lattice simulation and recovery toolkit"};
  app.require_subcommand(1);

  CommonArgs simulate_args, scan_args, sweep_args, recover_args, lemmas_args;
  std::string scan_peaks_path;

  CLI::App* simulate = app.add_subcommand(
      "simulate", "write a realization of W within B_R as CSV");
  add_common(simulate, simulate_args);

  CLI::App* scan = app.add_subcommand(
      "scan", "evaluate M_R over a frequency grid and write CSV");
  add_common(scan, scan_args);
  scan->add_option("--peaks-out", scan_peaks_path,
                   "also write thresholded cluster representatives");

  CLI::App* sweep = app.add_subcommand(
      "sweep", "evaluate M_R along the config radii at fixed frequencies");
  add_common(sweep, sweep_args);

  CLI::App* recover = app.add_subcommand(
      "recover", "recover the lattice from one realization; JSON report");
  add_common(recover, recover_args);

  CLI::App* lemmas = app.add_subcommand(
      "verify-lemmas", "run the numerical lemma suites; JSON report");
  add_common(lemmas, lemmas_args);

  try {
    app.parse(argc, argv);
    if (simulate->parsed()) return run_simulate(simulate_args);
    if (scan->parsed()) return run_scan(scan_args, scan_peaks_path);
    if (sweep->parsed()) return run_sweep(sweep_args);
    if (recover->parsed()) return run_recover(recover_args);
    if (lemmas->parsed()) return run_verify_lemmas(lemmas_args);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  } catch (const ParseError& e) {
    std::cerr << "config parse error: " << e.what() << "\n";
    return 2;
  } catch (const ValidationError& e) {
    std::cerr << "config validation error: " << e.what() << "\n";
    return 2;
  } catch (const RankDeficient& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const NotALattice& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return 3;
  } catch (const Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}
