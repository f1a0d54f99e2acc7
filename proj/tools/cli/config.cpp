#include "cli/config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <initializer_list>
#include <map>

namespace ocpopt::cli {

namespace {

using nlohmann::json;

void allow_keys(const json& obj, const std::string& where, std::initializer_list<const char*> keys) {
  if (!obj.is_object()) throw ConfigError(where + " must be an object");
  for (const auto& item : obj.items()) {
    const bool known = std::any_of(keys.begin(), keys.end(),
                                   [&](const char* k) { return item.key() == k; });
    if (!known) throw ConfigError(where + ": unknown key '" + item.key() + "'");
  }
}

double get_number(const json& v, const std::string& where) {
  if (!v.is_number()) throw ConfigError(where + " must be a number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(where + " must be finite");
  return d;
}

int get_int(const json& v, const std::string& where) {
  if (!v.is_number_integer()) throw ConfigError(where + " must be an integer");
  return v.get<int>();
}

bool get_bool(const json& v, const std::string& where) {
  if (!v.is_boolean()) throw ConfigError(where + " must be true or false");
  return v.get<bool>();
}

std::vector<double> get_numbers(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be a non-empty array");
  std::vector<double> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_number(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

std::vector<int> get_ints(const json& v, const std::string& where) {
  if (v.is_number_integer()) return {v.get<int>()};
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be an integer or array");
  std::vector<int> out;
  for (std::size_t i = 0; i < v.size(); ++i) {
    out.push_back(get_int(v[i], where + "[" + std::to_string(i) + "]"));
  }
  return out;
}

Mat get_matrix(const json& v, const std::string& where) {
  if (!v.is_array() || v.empty()) throw ConfigError(where + " must be an array of rows");
  const auto n = static_cast<Eigen::Index>(v.size());
  Mat m(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto row = get_numbers(v[static_cast<std::size_t>(i)], where);
    if (static_cast<Eigen::Index>(row.size()) != n) throw ConfigError(where + " must be square");
    for (Eigen::Index j = 0; j < n; ++j) m(i, j) = row[static_cast<std::size_t>(j)];
  }
  return m;
}

void read_weight(const json& obj, const std::string& where, double& r, Mat& R) {
  if (obj.contains("r")) {
    r = get_number(obj["r"], where + ".r");
    if (!(r > 0.0)) throw ConfigError(where + ".r must be > 0");
  }
  if (obj.contains("R")) R = get_matrix(obj["R"], where + ".R");
}

ProblemConfig parse_problem(const json& v) {
  allow_keys(v, "problem", {"name", "params", "dim", "seed"});
  ProblemConfig p;
  if (!v.contains("name") || !v["name"].is_string()) {
    throw ConfigError("problem.name must be a string");
  }
  p.name = v["name"].get<std::string>();
  if (v.contains("params")) {
    const json& params = v["params"];
    if (!params.is_object()) throw ConfigError("problem.params must be an object");
    for (const auto& item : params.items()) {
      const std::string where = "problem.params." + item.key();
      if (item.value().is_array()) {
        p.params.lists[item.key()] = get_numbers(item.value(), where);
      } else {
        p.params.scalars[item.key()] = get_number(item.value(), where);
      }
    }
  }
  if (v.contains("dim")) {
    p.dim = get_int(v["dim"], "problem.dim");
    if (*p.dim < 1) throw ConfigError("problem.dim must be >= 1");
  }
  if (v.contains("seed")) {
    if (!v["seed"].is_number_unsigned()) throw ConfigError("problem.seed must be a non-negative integer");
    p.params.seed = v["seed"].get<std::uint64_t>();
  }
  return p;
}

SolverConfig parse_solver(const json& v, std::size_t index) {
  const std::string where = "solvers[" + std::to_string(index) + "]";
  allow_keys(v, where, {"kind", "label", "r", "R", "N", "lr", "grad_tol", "max_outer", "adapt",
                        "repeat_passes"});
  SolverConfig s;
  if (!v.contains("kind") || !v["kind"].is_string()) throw ConfigError(where + ".kind must be a string");
  try {
    s.kind = parse_solver_kind(v["kind"].get<std::string>());
  } catch (const BadParams& e) {
    throw ConfigError(where + ": " + e.what());
  }
  if (v.contains("label")) {
    if (!v["label"].is_string() || v["label"].get<std::string>().empty()) {
      throw ConfigError(where + ".label must be a non-empty string");
    }
    s.label = v["label"].get<std::string>();
  }
  read_weight(v, where, s.r, s.R);
  if (v.contains("N")) {
    s.N = get_int(v["N"], where + ".N");
    if (s.N < 0) throw ConfigError(where + ".N must be >= 0");
  }
  if (v.contains("lr")) s.lr = get_number(v["lr"], where + ".lr");
  if (v.contains("grad_tol")) s.grad_tol = get_number(v["grad_tol"], where + ".grad_tol");
  if (v.contains("max_outer")) s.max_outer = get_int(v["max_outer"], where + ".max_outer");
  if (v.contains("repeat_passes")) s.repeat_passes = get_bool(v["repeat_passes"], where + ".repeat_passes");
  if (v.contains("adapt")) {
    const json& a = v["adapt"];
    allow_keys(a, where + ".adapt", {"enabled", "rho", "max_retries"});
    if (a.contains("enabled")) s.adapt.enabled = get_bool(a["enabled"], where + ".adapt.enabled");
    if (a.contains("rho")) s.adapt.rho = get_number(a["rho"], where + ".adapt.rho");
    if (a.contains("max_retries")) {
      s.adapt.max_retries = get_int(a["max_retries"], where + ".adapt.max_retries");
    }
  }
  return s;
}

HorizonConfig parse_horizon(const json& v, const std::string& where) {
  allow_keys(v, where, {"N", "r", "R"});
  HorizonConfig h;
  if (v.contains("N")) h.N = get_int(v["N"], where + ".N");
  if (h.N < 0) throw ConfigError(where + ".N must be >= 0");
  read_weight(v, where, h.r, h.R);
  return h;
}

VerifyConfig parse_verify(const json& v) {
  allow_keys(v, "verify", {"cost_optimality", "implicit", "semi_implicit", "phi_probe"});
  VerifyConfig out;
  if (v.contains("cost_optimality")) {
    const json& l = v["cost_optimality"];
    allow_keys(l, "verify.cost_optimality", {"N", "half_weight", "r", "R"});
    CostOptimalityConfig c;
    if (l.contains("N")) c.horizons = get_ints(l["N"], "verify.cost_optimality.N");
    for (int n : c.horizons) {
      if (n < 0) throw ConfigError("verify.cost_optimality.N must be >= 0");
    }
    if (l.contains("half_weight")) c.half_weight = get_bool(l["half_weight"], "verify.cost_optimality.half_weight");
    read_weight(l, "verify.cost_optimality", c.r, c.R);
    out.cost_optimality = std::move(c);
  }
  if (v.contains("implicit")) out.implicit = parse_horizon(v["implicit"], "verify.implicit");
  if (v.contains("semi_implicit")) {
    out.semi_implicit = parse_horizon(v["semi_implicit"], "verify.semi_implicit");
  }
  if (v.contains("phi_probe")) {
    const json& p = v["phi_probe"];
    allow_keys(p, "verify.phi_probe", {"r_grid", "N_grid"});
    PhiProbeConfig c;
    if (p.contains("r_grid")) c.r_grid = get_numbers(p["r_grid"], "verify.phi_probe.r_grid");
    if (p.contains("N_grid")) c.N_grid = get_ints(p["N_grid"], "verify.phi_probe.N_grid");
    for (double r : c.r_grid) {
      if (!(r > 0.0)) throw ConfigError("verify.phi_probe.r_grid entries must be > 0");
    }
    for (int n : c.N_grid) {
      if (n < 0) throw ConfigError("verify.phi_probe.N_grid entries must be >= 0");
    }
    out.phi_probe = std::move(c);
  }
  return out;
}

RatesConfig parse_rates(const json& v) {
  allow_keys(v, "rates", {"r_grid", "N_grid", "tail"});
  RatesConfig c;
  if (v.contains("r_grid")) c.r_grid = get_numbers(v["r_grid"], "rates.r_grid");
  if (v.contains("N_grid")) c.N_grid = get_ints(v["N_grid"], "rates.N_grid");
  if (v.contains("tail")) c.tail = get_int(v["tail"], "rates.tail");
  for (double r : c.r_grid) {
    if (!(r > 0.0)) throw ConfigError("rates.r_grid entries must be > 0");
  }
  for (int n : c.N_grid) {
    if (n < 0) throw ConfigError("rates.N_grid entries must be >= 0");
  }
  if (c.tail < 3) throw ConfigError("rates.tail must be >= 3");
  return c;
}

void apply_format(OutputConfig& out, const std::string& format) {
  if (format == "csv") {
    out.csv = true;
    out.json = false;
  } else if (format == "json") {
    out.csv = false;
    out.json = true;
  } else if (format == "both") {
    out.csv = out.json = true;
  } else {
    throw ConfigError("format must be csv, json or both");
  }
}

}  // namespace

ExperimentConfig parse_config(const json& input, const Overrides& overrides) {
  json doc = input;
  allow_keys(doc, "config", {"problem", "x0", "solvers", "outputs", "verify", "rates"});
  if (overrides.seed) {
    if (!doc.contains("problem") || !doc["problem"].is_object()) {
      throw ConfigError("config must contain a 'problem' object");
    }
    doc["problem"]["seed"] = *overrides.seed;
  }

  ExperimentConfig cfg;
  if (!doc.contains("problem")) throw ConfigError("config must contain a 'problem' object");
  cfg.problem = parse_problem(doc["problem"]);

  if (doc.contains("x0")) {
    const json& x0 = doc["x0"];
    if (x0.is_string()) {
      cfg.x0_preset = x0.get<std::string>();
      if (cfg.x0_preset != "standard" && cfg.x0_preset != "minimizer") {
        throw ConfigError("x0 preset must be 'standard' or 'minimizer'");
      }
    } else if (x0.is_number()) {
      cfg.x0 = std::vector<double>{get_number(x0, "x0")};
    } else {
      cfg.x0 = get_numbers(x0, "x0");
    }
  }

  if (doc.contains("solvers")) {
    const json& s = doc["solvers"];
    if (!s.is_array()) throw ConfigError("solvers must be an array");
    for (std::size_t i = 0; i < s.size(); ++i) cfg.solvers.push_back(parse_solver(s[i], i));
  }
  // Default labels: the kind, suffixed with the index when a kind repeats.
  std::map<SolverKind, int> kind_count;
  for (const auto& s : cfg.solvers) ++kind_count[s.kind];
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    auto& s = cfg.solvers[i];
    if (!s.label.empty()) continue;
    s.label = std::string(to_string(s.kind));
    if (kind_count[s.kind] > 1) s.label += "_" + std::to_string(i);
  }
  for (std::size_t i = 0; i < cfg.solvers.size(); ++i) {
    for (std::size_t j = i + 1; j < cfg.solvers.size(); ++j) {
      if (cfg.solvers[i].label == cfg.solvers[j].label) {
        throw ConfigError("duplicate solver label '" + cfg.solvers[i].label + "'");
      }
    }
    const auto& label = cfg.solvers[i].label;
    if (label.find_first_of("/\\") != std::string::npos || label == "." || label == "..") {
      throw ConfigError("solver label '" + label + "' cannot be used as a file name");
    }
  }

  if (doc.contains("outputs")) {
    const json& o = doc["outputs"];
    allow_keys(o, "outputs", {"dir", "formats"});
    if (o.contains("dir")) {
      if (!o["dir"].is_string()) throw ConfigError("outputs.dir must be a string");
      cfg.outputs.dir = o["dir"].get<std::string>();
    }
    if (o.contains("formats")) {
      const json& f = o["formats"];
      if (!f.is_array() || f.empty()) throw ConfigError("outputs.formats must be a non-empty array");
      cfg.outputs.csv = cfg.outputs.json = false;
      for (const auto& item : f) {
        if (item == "csv") {
          cfg.outputs.csv = true;
        } else if (item == "json") {
          cfg.outputs.json = true;
        } else {
          throw ConfigError("outputs.formats entries must be 'csv' or 'json'");
        }
      }
    }
  }
  if (overrides.out_dir) {
    cfg.outputs.dir = *overrides.out_dir;
    doc["outputs"]["dir"] = *overrides.out_dir;
  }
  if (overrides.format) {
    apply_format(cfg.outputs, *overrides.format);
    json formats = json::array();
    if (cfg.outputs.csv) formats.push_back("csv");
    if (cfg.outputs.json) formats.push_back("json");
    doc["outputs"]["formats"] = formats;
  }

  if (doc.contains("verify")) cfg.verify = parse_verify(doc["verify"]);
  if (doc.contains("rates")) cfg.rates = parse_rates(doc["rates"]);
  cfg.echo = std::move(doc);
  return cfg;
}

ExperimentConfig load_config(const std::string& path, const Overrides& overrides) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file '" + path + "'");
  json doc;
  try {
    doc = json::parse(in, nullptr, true, /*ignore_comments=*/true);
  } catch (const json::parse_error& e) {
    throw ConfigError("cannot parse '" + path + "': " + e.what());
  }
  return parse_config(doc, overrides);
}

Problem build_problem(const ExperimentConfig& config) {
  ProblemParams params = config.problem.params;
  if (config.problem.dim && config.problem.name == "rosenbrock" && !params.scalars.count("n")) {
    params.scalars["n"] = *config.problem.dim;
  }
  Problem problem;
  try {
    problem = builtin(config.problem.name, params);
  } catch (const Error& e) {
    throw ConfigError(std::string("problem: ") + e.what());
  }
  if (config.problem.dim && *config.problem.dim != problem.objective.dim) {
    throw ConfigError("problem.dim does not match the problem's dimension");
  }
  return problem;
}

Vec resolve_x0(const ExperimentConfig& config, const Problem& problem) {
  const Eigen::Index n = problem.objective.dim;
  if (config.x0) {
    if (static_cast<Eigen::Index>(config.x0->size()) != n) {
      throw ConfigError("x0 has " + std::to_string(config.x0->size()) + " entries, problem has " +
                        std::to_string(n));
    }
    return Eigen::Map<const Vec>(config.x0->data(), n);
  }
  if (config.x0_preset == "minimizer") {
    if (!problem.minimizer) throw ConfigError("x0 = 'minimizer' but the problem has no known minimizer");
    return problem.minimizer->x_star;
  }
  return problem.standard_start;
}

SolverSpec resolve_solver(const SolverConfig& solver, Eigen::Index dim) {
  SolverSpec spec;
  spec.label = solver.label;
  spec.kind = solver.kind;
  spec.ocp.R = solver.scalar_weight() ? Mat(solver.r * Mat::Identity(dim, dim)) : solver.R;
  spec.ocp.N = solver.N;
  spec.ocp.grad_tol = solver.grad_tol;
  spec.ocp.max_outer = solver.max_outer;
  spec.ocp.adapt = solver.adapt;
  spec.ocp.repeat_passes = solver.repeat_passes;
  spec.gd.lr = solver.lr;
  spec.gd.grad_tol = solver.grad_tol;
  spec.gd.max_outer = solver.max_outer;
  if (spec.ocp.R.rows() != dim) {
    throw ConfigError("solver '" + solver.label + "': R must be " + std::to_string(dim) + "x" +
                      std::to_string(dim));
  }
  try {
    if (solver.kind == SolverKind::GradientDescent) {
      spec.gd.validate();
    } else if (solver.kind == SolverKind::Newton) {
      if (!(spec.ocp.grad_tol > 0.0) || spec.ocp.max_outer < 0) throw BadParams("bad stopping rule");
    } else {
      spec.ocp.validate();
    }
  } catch (const Error& e) {
    throw ConfigError("solver '" + solver.label + "': " + e.what());
  }
  return spec;
}

std::vector<SolverSpec> resolve_solvers(const ExperimentConfig& config, Eigen::Index dim) {
  std::vector<SolverSpec> out;
  for (const auto& s : config.solvers) out.push_back(resolve_solver(s, dim));
  return out;
}

}  // namespace ocpopt::cli
