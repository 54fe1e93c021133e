#include "config.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <initializer_list>
#include <sstream>

namespace kdp::cli {

using nlohmann::json;

namespace {

const std::pair<Mode, const char*> kModes[] = {
    {Mode::Check, "check"},           {Mode::SolvePositive, "solve-positive"},
    {Mode::SolveNegative, "solve-negative"}, {Mode::SolveNodal, "solve-nodal"},
    {Mode::Sweep, "sweep"},           {Mode::FiberPlot, "fiber-plot"},
    {Mode::Report, "report"}};

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  if (!j.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [k, v] : j.items()) {
    if (std::none_of(keys.begin(), keys.end(), [&](const char* a) { return k == a; })) {
      throw ConfigError(where + ": unknown key '" + k + "'");
    }
  }
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

std::string rule_name(QuadratureRule r) {
  return r == QuadratureRule::EdgeMidpoint ? "edge-midpoint" : "vertex-average";
}

QuadratureRule parse_rule(const std::string& s) {
  if (s == "edge-midpoint") return QuadratureRule::EdgeMidpoint;
  if (s == "vertex-average") return QuadratureRule::VertexAverage;
  throw ConfigError("quadrature: unknown rule '" + s + "'");
}

void validate(const RunConfig& c) {
  const auto require = [](bool ok, const std::string& msg) {
    if (!ok) throw ConfigError(msg);
  };
  const ProblemSpec& s = c.spec;
  require(s.nx >= 2 && s.ny >= 2, "mesh: nx and ny must be at least 2");
  require(s.domain.x1 > s.domain.x0 && s.domain.y1 > s.domain.y0, "domain: empty rectangle");
  require(!s.f.terms.empty(), "f.terms: at least one term required");
  for (const auto& t : s.f.terms) {
    require(t.c > 0.0 && t.r > 1.0, "f.terms: each term needs c > 0 and r > 1");
  }
  try {
    s.mu.validate(s.domain);
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("mu: ") + e.what());
  }
  const SolverOptions& o = c.solver;
  require(o.tol > 0.0 && o.armijo > 0.0 && o.armijo < 1.0, "solver: tol > 0 and 0 < armijo < 1");
  require(o.max_iter >= 1 && o.memory >= 0, "solver: max_iter >= 1, memory >= 0");
  require(o.path_nodes >= 3 && o.reequidistribute_every >= 1, "solver: path_nodes >= 3");
  require(o.projection.tol_rel > 0.0 && o.projection.fd_step > 0.0, "projection: tolerances > 0");
  require(o.projection.bracket.face_samples >= 2, "projection: face_samples >= 2");
  require(c.starts >= 1 && c.workers >= 1, "starts and workers must be at least 1");
  require(c.fiber_grid >= 3, "fiber.grid_n must be at least 3");
  if (c.mode == Mode::Sweep) require(!c.sweep.values.empty(), "sweep: no values");
  const auto& names = sweep_parameters();
  require(std::find(names.begin(), names.end(), c.sweep.parameter) != names.end(),
          "sweep: unknown parameter '" + c.sweep.parameter + "'");
}

}  // namespace

std::string to_string(Mode m) {
  for (const auto& [mode, name] : kModes) {
    if (mode == m) return name;
  }
  return "unknown";
}

Mode parse_mode(const std::string& name) {
  for (const auto& [mode, n] : kModes) {
    if (name == n) return mode;
  }
  throw ConfigError("unknown mode '" + name + "'");
}

const std::vector<std::string>& sweep_parameters() {
  static const std::vector<std::string> names{"p", "q", "theta", "a0", "b0", "r", "mu"};
  return names;
}

ProblemSpec with_parameter(ProblemSpec spec, const std::string& name, double value) {
  if (name == "p") spec.exps.p = value;
  else if (name == "q") spec.exps.q = value;
  else if (name == "theta") spec.kirchhoff.theta = value;
  else if (name == "a0") spec.kirchhoff.a0 = value;
  else if (name == "b0") spec.kirchhoff.b0 = value;
  else if (name == "r") spec.f.terms.at(0).r = value;
  else if (name == "mu") spec.mu.params.at(0) = value;
  else throw ConfigError("unknown sweep parameter '" + name + "'");
  return spec;
}

RunConfig parse_config(const json& j) {
  RunConfig c;
  try {
    reject_unknown(j,
                   {"p", "q", "theta", "a0", "b0", "mu", "f", "mesh", "domain", "quadrature", "mode",
                    "solver", "projection", "seed", "output_dir", "workers", "sweep", "fiber"},
                   "config");
    ProblemSpec& s = c.spec;
    read(j, "p", s.exps.p);
    read(j, "q", s.exps.q);
    read(j, "theta", s.kirchhoff.theta);
    read(j, "a0", s.kirchhoff.a0);
    read(j, "b0", s.kirchhoff.b0);
    if (j.contains("mu")) {
      const json& m = j.at("mu");
      reject_unknown(m, {"family", "params"}, "mu");
      if (m.contains("family")) {
        try {
          s.mu.family = Weight::parse_family(m.at("family").get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("mu: ") + e.what());
        }
      }
      read(m, "params", s.mu.params);
    }
    if (j.contains("f")) {
      const json& f = j.at("f");
      reject_unknown(f, {"terms"}, "f");
      if (f.contains("terms")) {
        s.f.terms.clear();
        for (const json& t : f.at("terms")) {
          if (!t.is_array() || t.size() != 2) throw ConfigError("f.terms: each term is [c, r]");
          s.f.terms.push_back({t[0].get<double>(), t[1].get<double>()});
        }
      }
    }
    if (j.contains("mesh")) {
      reject_unknown(j.at("mesh"), {"nx", "ny"}, "mesh");
      read(j.at("mesh"), "nx", s.nx);
      read(j.at("mesh"), "ny", s.ny);
    }
    if (j.contains("domain")) {
      const auto d = j.at("domain").get<std::vector<double>>();
      if (d.size() != 4) throw ConfigError("domain: expected [x0, x1, y0, y1]");
      s.domain = {d[0], d[1], d[2], d[3]};
    }
    if (j.contains("quadrature")) s.rule = parse_rule(j.at("quadrature").get<std::string>());
    if (j.contains("mode")) c.mode = parse_mode(j.at("mode").get<std::string>());

    if (j.contains("solver")) {
      const json& o = j.at("solver");
      reject_unknown(o,
                     {"tol", "max_iter", "preconditioner", "armijo", "memory", "path_nodes",
                      "reequidistribute_every", "starts"},
                     "solver");
      read(o, "tol", c.solver.tol);
      read(o, "max_iter", c.solver.max_iter);
      read(o, "armijo", c.solver.armijo);
      read(o, "memory", c.solver.memory);
      read(o, "path_nodes", c.solver.path_nodes);
      read(o, "reequidistribute_every", c.solver.reequidistribute_every);
      read(o, "starts", c.starts);
      if (o.contains("preconditioner")) {
        try {
          c.solver.preconditioner = parse_preconditioner(o.at("preconditioner").get<std::string>());
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("solver: ") + e.what());
        }
      }
    }
    if (j.contains("projection")) {
      const json& o = j.at("projection");
      reject_unknown(o,
                     {"tol_rel", "newton_max_iter", "fd_step", "max_bisection_depth", "face_samples",
                      "max_rounds"},
                     "projection");
      ProjectionOptions& pr = c.solver.projection;
      read(o, "tol_rel", pr.tol_rel);
      read(o, "newton_max_iter", pr.newton_max_iter);
      read(o, "fd_step", pr.fd_step);
      read(o, "max_bisection_depth", pr.max_bisection_depth);
      read(o, "face_samples", pr.bracket.face_samples);
      read(o, "max_rounds", pr.bracket.max_rounds);
    }
    read(j, "seed", c.seed);
    read(j, "output_dir", c.output_dir);
    read(j, "workers", c.workers);
    if (j.contains("sweep")) {
      reject_unknown(j.at("sweep"), {"parameter", "values"}, "sweep");
      read(j.at("sweep"), "parameter", c.sweep.parameter);
      read(j.at("sweep"), "values", c.sweep.values);
    }
    if (j.contains("fiber")) {
      reject_unknown(j.at("fiber"), {"grid_n"}, "fiber");
      read(j.at("fiber"), "grid_n", c.fiber_grid);
    }
  } catch (const json::exception& e) {
    throw ConfigError(std::string("config: ") + e.what());
  }
  validate(c);
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j);
}

json to_json(const RunConfig& c) {
  const ProblemSpec& s = c.spec;
  json terms = json::array();
  for (const auto& t : s.f.terms) terms.push_back({t.c, t.r});
  const ProjectionOptions& pr = c.solver.projection;
  json j = {
      {"p", s.exps.p},
      {"q", s.exps.q},
      {"theta", s.kirchhoff.theta},
      {"a0", s.kirchhoff.a0},
      {"b0", s.kirchhoff.b0},
      {"mu", {{"family", s.mu.family_name()}, {"params", s.mu.params}}},
      {"f", {{"terms", terms}}},
      {"mesh", {{"nx", s.nx}, {"ny", s.ny}}},
      {"domain", {s.domain.x0, s.domain.x1, s.domain.y0, s.domain.y1}},
      {"quadrature", rule_name(s.rule)},
      {"mode", to_string(c.mode)},
      {"solver",
       {{"tol", c.solver.tol},
        {"max_iter", c.solver.max_iter},
        {"preconditioner", to_string(c.solver.preconditioner)},
        {"armijo", c.solver.armijo},
        {"memory", c.solver.memory},
        {"path_nodes", c.solver.path_nodes},
        {"reequidistribute_every", c.solver.reequidistribute_every},
        {"starts", c.starts}}},
      {"projection",
       {{"tol_rel", pr.tol_rel},
        {"newton_max_iter", pr.newton_max_iter},
        {"fd_step", pr.fd_step},
        {"max_bisection_depth", pr.max_bisection_depth},
        {"face_samples", pr.bracket.face_samples},
        {"max_rounds", pr.bracket.max_rounds}}},
      {"seed", c.seed},
      {"workers", c.workers},
      {"sweep", {{"parameter", c.sweep.parameter}, {"values", c.sweep.values}}},
      {"fiber", {{"grid_n", c.fiber_grid}}},
  };
  if (!c.output_dir.empty()) j["output_dir"] = c.output_dir;
  return j;
}

std::string resolve_output_dir(const RunConfig& c) {
  if (!c.output_dir.empty()) return c.output_dir;
  if (const char* env = std::getenv("KDP_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "kdp_out";
}

}  // namespace kdp::cli
