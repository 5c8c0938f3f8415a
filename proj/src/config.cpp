#include "lattice_echo/config.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "lattice_echo/errors.hpp"

namespace lattice_echo {

namespace {

struct Value {
  enum Shape { kNumber, kWord, kVector, kMatrix } shape;
  double number = 0;
  std::string word;
  std::vector<double> vec;
  std::vector<std::vector<double>> mat;
  int line = 0;
};

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

double parse_number(const std::string& s, int line) {
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end == s.c_str() || *end != '\0') {
    throw ParseError(line, "expected a number, got '" + s + "'");
  }
  return v;
}

std::vector<std::string> split_top_level(const std::string& s, int line) {
  std::vector<std::string> parts;
  int depth = 0;
  std::string cur;
  for (char ch : s) {
    if (ch == '[') ++depth;
    if (ch == ']') --depth;
    if (depth < 0) throw ParseError(line, "unbalanced ']'");
    if (ch == ',' && depth == 0) {
      parts.push_back(trim(cur));
      cur.clear();
    } else {
      cur += ch;
    }
  }
  if (depth != 0) throw ParseError(line, "unbalanced '['");
  parts.push_back(trim(cur));
  return parts;
}

Value parse_value(const std::string& raw, int line) {
  Value v;
  v.line = line;
  const std::string s = trim(raw);
  if (s.empty()) throw ParseError(line, "empty value");
  if (s.front() != '[') {
    if ((s[0] >= 'a' && s[0] <= 'z') || (s[0] >= 'A' && s[0] <= 'Z')) {
      v.shape = Value::kWord;
      v.word = s;
    } else {
      v.shape = Value::kNumber;
      v.number = parse_number(s, line);
    }
    return v;
  }
  if (s.back() != ']') throw ParseError(line, "missing closing ']'");
  const std::string inner = trim(s.substr(1, s.size() - 2));
  if (!inner.empty() && inner.front() == '[') {
    v.shape = Value::kMatrix;
    for (const std::string& row : split_top_level(inner, line)) {
      if (row.size() < 2 || row.front() != '[' || row.back() != ']') {
        throw ParseError(line, "expected a [..] row, got '" + row + "'");
      }
      std::vector<double> entries;
      for (const std::string& cell :
           split_top_level(trim(row.substr(1, row.size() - 2)), line)) {
        entries.push_back(parse_number(cell, line));
      }
      v.mat.push_back(std::move(entries));
    }
  } else {
    v.shape = Value::kVector;
    for (const std::string& cell : split_top_level(inner, line)) {
      v.vec.push_back(parse_number(cell, line));
    }
  }
  return v;
}

double as_number(const Value& v, const std::string& key) {
  if (v.shape != Value::kNumber) {
    throw ValidationError(key, "expected a number");
  }
  return v.number;
}

Eigen::VectorXd as_vector(const Value& v, const std::string& key) {
  if (v.shape == Value::kNumber) {
    return Eigen::VectorXd::Constant(1, v.number);
  }
  if (v.shape != Value::kVector) throw ValidationError(key, "expected [a,b,...]");
  Eigen::VectorXd out(static_cast<int>(v.vec.size()));
  for (std::size_t i = 0; i < v.vec.size(); ++i) out[static_cast<int>(i)] = v.vec[i];
  return out;
}

Eigen::MatrixXd as_matrix(const Value& v, const std::string& key) {
  if (v.shape != Value::kMatrix || v.mat.empty()) {
    throw ValidationError(key, "expected [[..],[..]] row-major");
  }
  const int rows = static_cast<int>(v.mat.size());
  const int cols = static_cast<int>(v.mat.front().size());
  Eigen::MatrixXd out(rows, cols);
  for (int i = 0; i < rows; ++i) {
    if (static_cast<int>(v.mat[i].size()) != cols) {
      throw ValidationError(key, "ragged matrix rows");
    }
    for (int j = 0; j < cols; ++j) out(i, j) = v.mat[i][j];
  }
  return out;
}

std::vector<double> as_list(const Value& v, const std::string& key) {
  if (v.shape == Value::kNumber) return {v.number};
  if (v.shape != Value::kVector) throw ValidationError(key, "expected [a,b,...]");
  return v.vec;
}

std::vector<Eigen::VectorXd> as_vector_list(const Value& v, const std::string& key) {
  std::vector<Eigen::VectorXd> out;
  if (v.shape == Value::kVector) {
    out.push_back(as_vector(v, key));
    return out;
  }
  if (v.shape != Value::kMatrix) {
    throw ValidationError(key, "expected [[..],[..]] list of vectors");
  }
  for (const auto& row : v.mat) {
    Eigen::VectorXd x(static_cast<int>(row.size()));
    for (std::size_t i = 0; i < row.size(); ++i) x[static_cast<int>(i)] = row[i];
    out.push_back(std::move(x));
  }
  return out;
}

void check_positive(double x, const std::string& key) {
  if (!(x > 0) || !std::isfinite(x)) throw ValidationError(key, "must be > 0");
}

void check_beta(double x, const std::string& key) {
  if (!(x > 0) || !(x < 1)) throw ValidationError(key, "must be in (0,1)");
}

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

NoiseModel RunConfig::noise_model() const {
  const int d = dim();
  if (noise_kind == "gaussian") return gaussian_noise(d, noise_a);
  if (noise_kind == "uniform_box") return uniform_box_noise(d, noise_h);
  if (noise_kind == "uniform_cell") return uniform_cell_noise(lattice);
  if (noise_kind == "laplace") return laplace_noise(d, noise_b);
  if (noise_kind == "point_mass") return point_mass_noise(noise_v);
  if (noise_kind == "cauchy") return cauchy_noise(d, noise_gamma);
  throw ValidationError("noise.kind", "unknown kind '" + noise_kind + "'");
}

RunConfig parse_config(const std::string& text) {
  RunConfig c;
  std::istringstream is(text);
  std::string line;
  int lineno = 0;
  bool offset_given = false, noise_v_given = false, lambda_given = false,
       wiener_lambda_given = false;

  while (std::getline(is, line)) {
    ++lineno;
    const std::size_t hash = line.find('#');
    if (hash != std::string::npos) line = line.substr(0, hash);
    line = trim(line);
    if (line.empty()) continue;
    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(lineno, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const Value v = parse_value(line.substr(eq + 1), lineno);

    if (key == "lattice") {
      c.lattice = as_matrix(v, key);
    } else if (key == "offset") {
      c.offset = as_vector(v, key);
      offset_given = true;
    } else if (key == "seed") {
      const double s = as_number(v, key);
      if (s < 0 || s != std::floor(s)) {
        throw ValidationError(key, "must be a nonnegative integer");
      }
      c.seed = static_cast<std::uint64_t>(s);
    } else if (key == "workers") {
      const double w = as_number(v, key);
      if (w < 0 || w != std::floor(w)) {
        throw ValidationError(key, "must be a nonnegative integer");
      }
      c.workers = static_cast<int>(w);
    } else if (key == "noise.kind") {
      if (v.shape != Value::kWord) throw ValidationError(key, "expected a name");
      c.noise_kind = v.word;
    } else if (key == "noise.a") {
      c.noise_a = as_number(v, key);
      check_positive(c.noise_a, key);
    } else if (key == "noise.h") {
      c.noise_h = as_number(v, key);
      check_positive(c.noise_h, key);
    } else if (key == "noise.b") {
      c.noise_b = as_number(v, key);
      check_positive(c.noise_b, key);
    } else if (key == "noise.gamma") {
      c.noise_gamma = as_number(v, key);
      check_positive(c.noise_gamma, key);
    } else if (key == "noise.v") {
      c.noise_v = as_vector(v, key);
      noise_v_given = true;
    } else if (key == "simulate.radius") {
      c.simulate_radius = as_number(v, key);
      check_positive(c.simulate_radius, key);
    } else if (key == "scan.radius") {
      c.scan_radius = as_number(v, key);
      check_positive(c.scan_radius, key);
    } else if (key == "scan.box") {
      const auto box = as_list(v, key);
      if (box.size() != 2 || !(box[0] < box[1])) {
        throw ValidationError(key, "expected [lo,hi] with lo < hi");
      }
      c.scan_box_lo = box[0];
      c.scan_box_hi = box[1];
    } else if (key == "scan.spacing") {
      c.scan_spacing = as_number(v, key);
      check_positive(c.scan_spacing, key);
    } else if (key == "scan.beta") {
      c.scan_beta = as_number(v, key);
      check_beta(c.scan_beta, key);
    } else if (key == "sweep.radii") {
      c.sweep_radii = as_list(v, key);
      for (double r : c.sweep_radii) check_positive(r, key);
    } else if (key == "sweep.lambdas") {
      c.sweep_lambdas = as_vector_list(v, key);
      lambda_given = true;
    } else if (key == "recover.R_detect") {
      c.recover.R_detect = as_number(v, key);
      check_positive(c.recover.R_detect, key);
    } else if (key == "recover.R_verify") {
      c.recover.R_verify = as_number(v, key);
      check_positive(c.recover.R_verify, key);
    } else if (key == "recover.beta") {
      c.recover.beta = as_number(v, key);
      check_beta(c.recover.beta, key);
    } else if (key == "recover.beta_detect") {
      c.recover.beta_detect = as_number(v, key);
      check_beta(c.recover.beta_detect, key);
    } else if (key == "recover.box") {
      const auto box = as_list(v, key);
      if (box.size() != 2 || !(box[0] < box[1])) {
        throw ValidationError(key, "expected [lo,hi] with lo < hi");
      }
      c.recover.box_lo = box[0];
      c.recover.box_hi = box[1];
    } else if (key == "recover.spacing") {
      c.recover.spacing = as_number(v, key);
      if (c.recover.spacing < 0) throw ValidationError(key, "must be >= 0");
    } else if (key == "recover.target_radius") {
      c.recover.target_radius = as_number(v, key);
      if (c.recover.target_radius < 0) throw ValidationError(key, "must be >= 0");
    } else if (key == "recover.refine_tol") {
      c.recover.refine_tol = as_number(v, key);
      check_positive(c.recover.refine_tol, key);
    } else if (key == "lemmas.radii") {
      c.lemmas_radii = as_list(v, key);
      for (double r : c.lemmas_radii) check_positive(r, key);
    } else if (key == "lemmas.gauss_rmax") {
      c.lemmas_gauss_rmax = as_number(v, key);
      check_positive(c.lemmas_gauss_rmax, key);
    } else if (key == "lemmas.gauss_step") {
      c.lemmas_gauss_step = as_number(v, key);
      check_positive(c.lemmas_gauss_step, key);
    } else if (key == "lemmas.gauss_bound") {
      c.lemmas_gauss_bound = as_number(v, key);
      check_positive(c.lemmas_gauss_bound, key);
    } else if (key == "lemmas.wiener_radius") {
      c.lemmas_wiener_radius = as_number(v, key);
      check_positive(c.lemmas_wiener_radius, key);
    } else if (key == "lemmas.wiener_lambda") {
      c.lemmas_wiener_lambda = as_vector(v, key);
      wiener_lambda_given = true;
    } else if (key == "lemmas.affinity_radius") {
      c.lemmas_affinity_radius = as_number(v, key);
      check_positive(c.lemmas_affinity_radius, key);
    } else if (key == "lemmas.affinity_grid") {
      c.lemmas_affinity_grid = static_cast<int>(as_number(v, key));
      if (c.lemmas_affinity_grid != 0 && c.lemmas_affinity_grid < 2) {
        throw ValidationError(key, "must be 0 (auto) or >= 2");
      }
    } else if (key == "lemmas.affinity_pairs") {
      c.lemmas_affinity_pairs = static_cast<int>(as_number(v, key));
      if (c.lemmas_affinity_pairs < 1) throw ValidationError(key, "must be >= 1");
    } else if (key == "lemmas.density_pairs") {
      c.lemmas_density_pairs = static_cast<int>(as_number(v, key));
      if (c.lemmas_density_pairs < 1) throw ValidationError(key, "must be >= 1");
    } else {
      throw ValidationError(key, "unknown key");
    }
  }

  const int d = c.dim();
  if (c.lattice.rows() != c.lattice.cols()) {
    throw ValidationError("lattice", "must be square");
  }
  if (!offset_given) c.offset = Eigen::VectorXd::Zero(d);
  if (!noise_v_given) c.noise_v = Eigen::VectorXd::Zero(d);
  if (!lambda_given) {
    Eigen::VectorXd l = Eigen::VectorXd::Zero(d);
    l[0] = 1.0;
    c.sweep_lambdas = {l};
  }
  if (!wiener_lambda_given) {
    c.lemmas_wiener_lambda = Eigen::VectorXd::Zero(d);
    c.lemmas_wiener_lambda[0] = 1.0;
  }
  if (c.offset.size() != d) throw ValidationError("offset", "dimension mismatch");
  if (c.noise_v.size() != d) throw ValidationError("noise.v", "dimension mismatch");
  if (c.lemmas_wiener_lambda.size() != d) {
    throw ValidationError("lemmas.wiener_lambda", "dimension mismatch");
  }
  for (const auto& l : c.sweep_lambdas) {
    if (l.size() != d) throw ValidationError("sweep.lambdas", "dimension mismatch");
  }
  make_lattice(c.lattice);     // rejects singular bases
  (void)c.noise_model();       // validates kind and parameters
  return c;
}

RunConfig load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string serialize_config(const RunConfig& c) {
  std::ostringstream os;
  auto mat = [&](const Eigen::MatrixXd& m) {
    std::string s = "[";
    for (int i = 0; i < m.rows(); ++i) {
      s += i ? ",[" : "[";
      for (int j = 0; j < m.cols(); ++j) {
        s += (j ? "," : "") + format_double(m(i, j));
      }
      s += "]";
    }
    return s + "]";
  };
  auto vec = [&](const Eigen::VectorXd& v) {
    std::string s = "[";
    for (int i = 0; i < v.size(); ++i) s += (i ? "," : "") + format_double(v[i]);
    return s + "]";
  };
  auto list = [&](const std::vector<double>& v) {
    std::string s = "[";
    for (std::size_t i = 0; i < v.size(); ++i) {
      s += (i ? "," : "") + format_double(v[i]);
    }
    return s + "]";
  };
  os << "lattice = " << mat(c.lattice) << "\n";
  os << "offset = " << vec(c.offset) << "\n";
  os << "seed = " << c.seed << "\n";
  os << "workers = " << c.workers << "\n";
  os << "noise.kind = " << c.noise_kind << "\n";
  os << "noise.a = " << format_double(c.noise_a) << "\n";
  os << "noise.h = " << format_double(c.noise_h) << "\n";
  os << "noise.b = " << format_double(c.noise_b) << "\n";
  os << "noise.gamma = " << format_double(c.noise_gamma) << "\n";
  os << "noise.v = " << vec(c.noise_v) << "\n";
  os << "simulate.radius = " << format_double(c.simulate_radius) << "\n";
  os << "scan.radius = " << format_double(c.scan_radius) << "\n";
  os << "scan.box = [" << format_double(c.scan_box_lo) << ","
     << format_double(c.scan_box_hi) << "]\n";
  os << "scan.spacing = " << format_double(c.scan_spacing) << "\n";
  os << "scan.beta = " << format_double(c.scan_beta) << "\n";
  os << "sweep.radii = " << list(c.sweep_radii) << "\n";
  os << "sweep.lambdas = [";
  for (std::size_t i = 0; i < c.sweep_lambdas.size(); ++i) {
    os << (i ? "," : "") << vec(c.sweep_lambdas[i]);
  }
  os << "]\n";
  os << "recover.R_detect = " << format_double(c.recover.R_detect) << "\n";
  os << "recover.R_verify = " << format_double(c.recover.R_verify) << "\n";
  os << "recover.beta = " << format_double(c.recover.beta) << "\n";
  os << "recover.beta_detect = " << format_double(c.recover.beta_detect) << "\n";
  os << "recover.box = [" << format_double(c.recover.box_lo) << ","
     << format_double(c.recover.box_hi) << "]\n";
  os << "recover.spacing = " << format_double(c.recover.spacing) << "\n";
  os << "recover.target_radius = " << format_double(c.recover.target_radius)
     << "\n";
  os << "recover.refine_tol = " << format_double(c.recover.refine_tol) << "\n";
  os << "lemmas.radii = " << list(c.lemmas_radii) << "\n";
  os << "lemmas.gauss_rmax = " << format_double(c.lemmas_gauss_rmax) << "\n";
  os << "lemmas.gauss_step = " << format_double(c.lemmas_gauss_step) << "\n";
  os << "lemmas.gauss_bound = " << format_double(c.lemmas_gauss_bound) << "\n";
  os << "lemmas.wiener_radius = " << format_double(c.lemmas_wiener_radius) << "\n";
  os << "lemmas.wiener_lambda = " << vec(c.lemmas_wiener_lambda) << "\n";
  os << "lemmas.affinity_radius = " << format_double(c.lemmas_affinity_radius)
     << "\n";
  os << "lemmas.affinity_grid = " << c.lemmas_affinity_grid << "\n";
  os << "lemmas.affinity_pairs = " << c.lemmas_affinity_pairs << "\n";
  os << "lemmas.density_pairs = " << c.lemmas_density_pairs << "\n";
  return os.str();
}

}  // namespace lattice_echo
