#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <vector>

#include "lattice_echo/noise.hpp"
#include "lattice_echo/recovery.hpp"

namespace lattice_echo {

// Run configuration shared by the CLI subcommands. Plain-text key=value
// files with dotted section keys; `#` starts a comment. Unknown keys are
// rejected. parse -> serialize -> parse is the identity.
struct RunConfig {
  Eigen::MatrixXd lattice = Eigen::MatrixXd::Identity(2, 2);
  Eigen::VectorXd offset = Eigen::VectorXd::Zero(2);
  std::uint64_t seed = 1;
  int workers = 0;  // 0 = all cores

  std::string noise_kind = "gaussian";
  double noise_a = 0.1;
  double noise_h = 0.5;
  double noise_b = 1.0;
  double noise_gamma = 1.0;
  Eigen::VectorXd noise_v = Eigen::VectorXd::Zero(2);

  double simulate_radius = 50;

  double scan_radius = 100;
  double scan_box_lo = -2.5;
  double scan_box_hi = 2.5;
  double scan_spacing = 0.0025;
  double scan_beta = 0.007;

  std::vector<double> sweep_radii = {25, 50, 100, 200};
  std::vector<Eigen::VectorXd> sweep_lambdas;  // default {(1,0,...)}

  RecoveryParams recover;

  std::vector<double> lemmas_radii = {25, 50, 100, 200};
  double lemmas_gauss_rmax = 200;
  double lemmas_gauss_step = 10;
  double lemmas_gauss_bound = 6;
  double lemmas_wiener_radius = 150;
  Eigen::VectorXd lemmas_wiener_lambda;  // default (1,0,...)
  double lemmas_affinity_radius = 50;
  int lemmas_affinity_grid = 0;  // 0 = auto: 256 for d=1, 128 per axis above
  int lemmas_affinity_pairs = 20;
  int lemmas_density_pairs = 100;

  int dim() const { return static_cast<int>(lattice.rows()); }
  NoiseModel noise_model() const;
};

RunConfig parse_config(const std::string& text);
RunConfig load_config_file(const std::string& path);
std::string serialize_config(const RunConfig& config);

}  // namespace lattice_echo
