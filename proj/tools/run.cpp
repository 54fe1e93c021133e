#include "run.hpp"

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <optional>
#include <ostream>
#include <sstream>

#include "kdp/errors.hpp"
#include "kdp/parallel.hpp"

namespace kdp::cli {

namespace fs = std::filesystem;

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string kind_tag(SolutionKind k) { return to_string(k); }

void write_file(const fs::path& path, const std::function<void(std::ostream&)>& body) {
  std::ofstream os(path);
  if (!os) throw std::runtime_error("cannot write " + path.string());
  body(os);
}

class Stopwatch {
 public:
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

 private:
  std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
};

// Writes the report and returns true when every hypothesis holds and the
// problem assembles.
bool hypotheses_hold(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const HypothesisReport rep = check_hypotheses(c.spec, default_sample_grid());
  write_file(dir / "hypotheses.csv", [&](std::ostream& os) { write_report(os, rep); });
  for (const auto& v : rep.verdicts) {
    if (!v.passed) log << "hypothesis " << v.id << " fails: " << v.detail << '\n';
  }
  if (!rep.all_passed()) return false;
  try {
    const Problem pb(c.spec);
  } catch (const std::invalid_argument& e) {
    log << "problem rejected: " << e.what() << '\n';
    return false;
  }
  return true;
}

void persist(const RunConfig& c, const fs::path& dir, const std::string& tag, const SolveOutcome& out) {
  write_file(dir / ("summary_" + tag + ".csv"), [&](std::ostream& os) { write_summary(os, c, out); });
  write_file(dir / ("field_" + tag + ".csv"), [&](std::ostream& os) { write_field(os, out.solution); });
  write_file(dir / ("trace_" + tag + ".csv"), [&](std::ostream& os) { write_trace(os, out); });
}

int solve_constant_sign(const RunConfig& c, const fs::path& dir, Sign sign, std::ostream& log) {
  const Problem pb(c.spec);
  write_file(dir / "mesh.txt", [&](std::ostream& os) { pb.mesh().write(os); });
  Stopwatch sw;
  SolveOutcome out = mountain_pass(pb, sign, c.solver);
  out.seed = c.seed;
  const std::string tag = sign == Sign::Plus ? "positive" : "negative";
  persist(c, dir, tag, out);
  log << tag << ": energy " << num(out.energy) << ", residual " << out.residual_norm << ", "
      << out.iterations << " iterations, " << sw.seconds() << " s"
      << (out.message.empty() ? "" : " (" + out.message + ")") << '\n';
  return out.converged && satisfies_invariants(out, c.solver.tol) ? kOk : kNonconvergence;
}

int solve_nodal(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const Problem pb(c.spec);
  write_file(dir / "mesh.txt", [&](std::ostream& os) { pb.mesh().write(os); });
  Stopwatch sw;
  std::vector<SolveOutcome> all;
  const SolveOutcome out = minimize_over_M(pb, c.starts, c.solver, c.seed, c.workers, &all);
  persist(c, dir, "nodal", out);
  write_file(dir / "nodal_candidates.csv", [&](std::ostream& os) {
    os << "seed,energy,residual,iterations,converged\n";
    for (const auto& o : all) {
      os << o.seed << ',' << num(o.energy) << ',' << num(o.residual_norm) << ',' << o.iterations
         << ',' << (o.converged ? 1 : 0) << '\n';
    }
  });
  log << "nodal: energy " << num(out.energy) << ", residual " << out.residual_norm << ", seed "
      << out.seed << ", " << sw.seconds() << " s" << '\n';
  return out.converged && satisfies_invariants(out, c.solver.tol) ? kOk : kNonconvergence;
}

struct SweepRow {
  double value = 0.0;
  bool hypotheses = false;
  std::optional<SolveOutcome> plus, minus, nodal;
  std::string error;
};

SweepRow sweep_row(const RunConfig& c, double value) {
  SweepRow row;
  row.value = value;
  const ProblemSpec spec = with_parameter(c.spec, c.sweep.parameter, value);
  row.hypotheses = check_hypotheses(spec, default_sample_grid()).all_passed();
  if (!row.hypotheses) return row;
  try {
    const Problem pb(spec);
    row.plus = mountain_pass(pb, Sign::Plus, c.solver);
    row.minus = mountain_pass(pb, Sign::Minus, c.solver);
    row.nodal = minimize_over_M(pb, c.starts, c.solver, c.seed);
  } catch (const std::exception& e) {
    row.hypotheses = !dynamic_cast<const std::invalid_argument*>(&e);
    row.error = e.what();
  }
  return row;
}

int sweep(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const auto& values = c.sweep.values;
  const auto rows = parallel_map(values.size(), c.workers,
                                 [&](std::size_t i) { return sweep_row(c, values[i]); });
  int status = kOk;
  write_file(dir / "sweep.csv", [&](std::ostream& os) {
    os << "# sweep\n# parameter: " << c.sweep.parameter << "\n# seed: " << c.seed
       << "\n# tol: " << num(c.solver.tol) << '\n';
    os << "parameter,value,hypotheses,m_plus,m_minus,m0,residual_plus,residual_minus,"
          "residual_nodal,converged_plus,converged_minus,converged_nodal\n";
    for (const auto& r : rows) {
      const auto e = [](const std::optional<SolveOutcome>& o) { return o ? num(o->energy) : "nan"; };
      const auto res = [](const std::optional<SolveOutcome>& o) {
        return o ? num(o->residual_norm) : "nan";
      };
      const auto ok = [&](const std::optional<SolveOutcome>& o) {
        return o && o->converged && satisfies_invariants(*o, c.solver.tol);
      };
      os << c.sweep.parameter << ',' << num(r.value) << ',' << (r.hypotheses ? "PASS" : "FAIL")
         << ',' << e(r.plus) << ',' << e(r.minus) << ',' << e(r.nodal) << ',' << res(r.plus) << ','
         << res(r.minus) << ',' << res(r.nodal) << ',' << ok(r.plus) << ',' << ok(r.minus) << ','
         << ok(r.nodal) << '\n';
      if (!r.hypotheses) {
        status = std::max(status, static_cast<int>(kHypothesisFailure));
      } else if (!(ok(r.plus) && ok(r.minus) && ok(r.nodal))) {
        status = kNonconvergence;
      }
      log << "sweep " << c.sweep.parameter << '=' << r.value
          << (r.hypotheses ? "" : " hypotheses fail")
          << (r.error.empty() ? "" : " (" + r.error + ")") << '\n';
    }
  });
  return status;
}

int fiber_plot(const RunConfig& c, const fs::path& dir, std::ostream& log) {
  const Problem pb(c.spec);
  const MeshFunction start = nodal_start(pb, c.seed);
  const NehariPair first = project_to_M(start, pb, c.solver.projection);
  const MeshFunction& y = first.projected;
  const NehariPair self = project_to_M(y, pb, c.solver.projection);
  const FiberReport rep = fiber_max_check(y, pb, self, c.fiber_grid);
  write_file(dir / "fiber.csv", [&](std::ostream& os) { rep.sample.write(os); });
  write_file(dir / "field_fiber.csv", [&](std::ostream& os) { write_field(os, y); });
  const bool ok = rep.max_at_pair && rep.argmax_nearest_pair && rep.outer_shell_negative;
  write_file(dir / "fiber_summary.csv", [&](std::ostream& os) {
    os << "# fiber\n# seed: " << c.seed << "\n# grid_n: " << c.fiber_grid << '\n';
    os << "alpha,beta,pair_value,max_value,argmax_alpha,argmax_beta,max_at_pair,"
          "argmax_nearest_pair,boundary_below,outer_radius,outer_shell_negative\n";
    os << num(self.alpha) << ',' << num(self.beta) << ',' << num(rep.pair_value) << ','
       << num(rep.max_value) << ',' << num(rep.argmax[0]) << ',' << num(rep.argmax[1]) << ','
       << rep.max_at_pair << ',' << rep.argmax_nearest_pair << ',' << rep.boundary_below << ','
       << num(rep.outer_radius) << ',' << rep.outer_shell_negative << '\n';
  });
  log << "fiber: maximum " << (ok ? "at the pair" : "NOT at the pair") << ", value "
      << num(rep.pair_value) << '\n';
  return ok ? kOk : kNonconvergence;
}

}  // namespace

std::vector<std::string> artifacts_for(Mode mode) {
  const auto solve = [](const std::string& tag) {
    return std::vector<std::string>{"hypotheses.csv", "mesh.txt", "summary_" + tag + ".csv",
                                    "field_" + tag + ".csv", "trace_" + tag + ".csv"};
  };
  switch (mode) {
    case Mode::Check:
      return {"hypotheses.csv"};
    case Mode::SolvePositive:
      return solve("positive");
    case Mode::SolveNegative:
      return solve("negative");
    case Mode::SolveNodal: {
      auto files = solve("nodal");
      files.push_back("nodal_candidates.csv");
      return files;
    }
    case Mode::Sweep:
      return {"sweep.csv"};
    case Mode::FiberPlot:
      return {"hypotheses.csv", "fiber.csv", "field_fiber.csv", "fiber_summary.csv"};
    case Mode::Report:
      return {"report.txt"};
  }
  return {};
}

void write_summary(std::ostream& os, const RunConfig& c, const SolveOutcome& out) {
  os << "# kdp summary\n";
  os << "# mode: " << to_string(c.mode) << '\n';
  os << "# tol: " << num(c.solver.tol) << '\n';
  os << "# mesh: " << c.spec.nx << 'x' << c.spec.ny << '\n';
  os << "# preconditioner: " << to_string(c.solver.preconditioner) << '\n';
  os << "# message: " << out.message << '\n';
  os << "kind,energy,residual,iterations,seed,converged,invariants,min_value,max_value\n";
  os << kind_tag(out.kind) << ',' << num(out.energy) << ',' << num(out.residual_norm) << ','
     << out.iterations << ',' << out.seed << ',' << (out.converged ? 1 : 0) << ','
     << (satisfies_invariants(out, c.solver.tol) ? 1 : 0) << ',' << num(out.solution.min()) << ','
     << num(out.solution.max()) << '\n';
}

void write_field(std::ostream& os, const MeshFunction& u) {
  const auto verts = u.mesh().vertices();
  os << "# vertex,x,y,value\n";
  for (std::size_t i = 0; i < u.size(); ++i) {
    os << i << ',' << num(verts[i].x) << ',' << num(verts[i].y) << ',' << num(u[i]) << '\n';
  }
}

void write_trace(std::ostream& os, const SolveOutcome& out) {
  os << "# iteration,energy,residual\n";
  for (std::size_t k = 0; k < out.trace.size(); ++k) {
    os << k << ',' << num(out.trace[k].energy) << ',' << num(out.trace[k].residual) << '\n';
  }
}

int run(const RunConfig& c, std::ostream& log) {
  const fs::path dir = resolve_output_dir(c);
  fs::create_directories(dir);
  log << "mode " << to_string(c.mode) << ", output " << dir.string() << '\n';

  if (c.mode == Mode::Report) {
    const Report rep = render_report(dir.string());
    write_file(dir / "report.txt", [&](std::ostream& os) { os << rep.text; });
    log << rep.text;
    return kOk;
  }
  if (c.mode == Mode::Sweep) return sweep(c, dir, log);

  if (!hypotheses_hold(c, dir, log)) return kHypothesisFailure;
  if (c.mode == Mode::Check) {
    log << "all hypotheses consistent on the sample grid\n";
    return kOk;
  }
  try {
    switch (c.mode) {
      case Mode::SolvePositive:
        return solve_constant_sign(c, dir, Sign::Plus, log);
      case Mode::SolveNegative:
        return solve_constant_sign(c, dir, Sign::Minus, log);
      case Mode::SolveNodal:
        return solve_nodal(c, dir, log);
      case Mode::FiberPlot:
        return fiber_plot(c, dir, log);
      default:
        break;
    }
  } catch (const ConfigurationError& e) {
    log << "error: " << e.what() << '\n';
    return kHypothesisFailure;
  } catch (const std::runtime_error& e) {
    log << "error: " << e.what() << '\n';
    return kNonconvergence;
  }
  return kOk;
}

}  // namespace kdp::cli
