#include "kdp/solvers.hpp"

#include <Eigen/Sparse>
#include <Eigen/SparseCholesky>
#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"
#include "kdp/fields.hpp"
#include "kdp/parallel.hpp"

namespace kdp {

std::string to_string(Preconditioner p) {
  switch (p) {
    case Preconditioner::None:
      return "none";
    case Preconditioner::Laplacian:
      return "laplacian";
    case Preconditioner::Secant:
      return "secant";

  }
  return "unknown";
}

Preconditioner parse_preconditioner(const std::string& name) {
  if (name == "none") return Preconditioner::None;
  if (name == "laplacian") return Preconditioner::Laplacian;
  if (name == "secant") return Preconditioner::Secant;

  throw std::invalid_argument("unknown preconditioner '" + name + "'");
}

std::string to_string(SolutionKind k) {
  switch (k) {
    case SolutionKind::Positive:
      return "positive";
    case SolutionKind::Negative:
      return "negative";
    case SolutionKind::Nodal:
      return "nodal";
  }
  return "unknown";
}

bool satisfies_invariants(const SolveOutcome& out, double tol, double tol_sign) {
  bool sign_ok = false;
  switch (out.kind) {
    case SolutionKind::Positive:
      sign_ok = out.solution.min() >= -tol_sign && out.solution.max() > 0.0;
      break;
    case SolutionKind::Negative:
      sign_ok = out.solution.max() <= tol_sign && out.solution.min() < 0.0;
      break;
    case SolutionKind::Nodal:
      sign_ok = out.solution.max() > 0.0 && out.solution.min() < 0.0;
      break;
  }
  return sign_ok && (!out.converged || out.residual_norm <= tol);
}

namespace {

// ---------------------------------------------------------------------------
// Descent metric

class Metric {
 public:
  Metric(const Problem& pb, Preconditioner kind) : pb_(pb), kind_(kind) {
    if (kind_ == Preconditioner::None) return;
    const std::vector<double> ones(pb_.mesh().num_triangles(), 1.0);
    assemble(ones);
    ldlt_.analyzePattern(matrix_);
    if (kind_ == Preconditioner::Laplacian) factorize();
  }

  Preconditioner kind() const { return kind_; }

  /// Metric inverse applied to a residual-like vector.
  std::vector<double> solve(const std::vector<double>& v) const {
    if (kind_ == Preconditioner::None) return v;
    const Eigen::Map<const Eigen::VectorXd> rhs(v.data(), static_cast<Eigen::Index>(v.size()));
    const Eigen::VectorXd d = ldlt_.solve(rhs);
    return {d.data(), d.data() + d.size()};
  }

  /// Refreshes the secant weights at u; a no-op for the fixed metrics.
  void update(const MeshFunction& u) {
    if (kind_ == Preconditioner::None || kind_ == Preconditioner::Laplacian) return;
    const CellField grad = gradient(u);
    const double kirchhoff = psi(phi_H(grad, pb_), pb_.kirchhoff());
    const auto mu = pb_.mu_cells();
    const double p = pb_.exps().p, q = pb_.exps().q;
    std::vector<double> w(grad.size());
    for (std::size_t t = 0; t < grad.size(); ++t) {
      w[t] = kirchhoff * flux_coefficient(grad[t].norm2(), p, q, mu[t]);
    }
    assemble(w);
    factorize();
  }

 private:
  void assemble(const std::vector<double>& cell_weight) {
    const Mesh& mesh = pb_.mesh();
    const auto tris = mesh.triangles();
    const auto areas = mesh.areas();
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(9 * tris.size());
    for (std::size_t t = 0; t < tris.size(); ++t) {
      const auto& b = mesh.basis_gradients(t);
      for (int i = 0; i < 3; ++i) {
        const int ri = mesh.interior_index(tris[t][i]);
        if (ri < 0) continue;
        for (int j = 0; j < 3; ++j) {
          const int rj = mesh.interior_index(tris[t][j]);
          if (rj < 0) continue;
          trips.emplace_back(ri, rj, cell_weight[t] * areas[t] * b[i].dot(b[j]));
        }
      }
    }
    const auto n = static_cast<Eigen::Index>(mesh.num_interior());
    matrix_.resize(n, n);
    matrix_.setFromTriplets(trips.begin(), trips.end());
  }

  void factorize() {
    ldlt_.factorize(matrix_);
    if (ldlt_.info() != Eigen::Success) {
      throw NumericDomainError("descent metric: factorization failed");
    }
  }

  const Problem& pb_;
  Preconditioner kind_;
  Eigen::SparseMatrix<double> matrix_;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt_;
};

double dot(const std::vector<double>& a, const std::vector<double>& b) {
  return std::inner_product(a.begin(), a.end(), b.begin(), 0.0);
}

// Limited-memory inverse-Hessian update on top of a metric.
class QuasiNewton {
 public:
  explicit QuasiNewton(int memory) : memory_(std::max(memory, 0)) {}

  std::size_t size() const { return s_.size(); }
  void clear() {
    s_.clear();
    y_.clear();
  }

  void push(const std::vector<double>& u, const std::vector<double>& u_old,
            const std::vector<double>& r, const std::vector<double>& r_old) {
    if (memory_ == 0) return;
    std::vector<double> s(u.size()), y(u.size());
    for (std::size_t i = 0; i < u.size(); ++i) {
      s[i] = u[i] - u_old[i];
      y[i] = r[i] - r_old[i];
    }
    const double sy = dot(s, y);
    if (!(sy > 1e-12 * std::sqrt(dot(s, s) * dot(y, y)))) return;
    if (s_.size() == static_cast<std::size_t>(memory_)) {
      s_.erase(s_.begin());
      y_.erase(y_.begin());
    }
    s_.push_back(std::move(s));
    y_.push_back(std::move(y));
  }

  // Two-loop recursion with the metric inverse as the initial matrix.
  std::vector<double> apply(const Metric& metric, std::vector<double> v) const {
    std::vector<double> a(s_.size());
    for (std::size_t k = s_.size(); k-- > 0;) {
      a[k] = dot(s_[k], v) / dot(y_[k], s_[k]);
      for (std::size_t i = 0; i < v.size(); ++i) v[i] -= a[k] * y_[k][i];
    }
    std::vector<double> d = metric.solve(v);
    if (metric.kind() == Preconditioner::None && !s_.empty()) {
      const double gamma = dot(s_.back(), y_.back()) / dot(y_.back(), y_.back());
      for (double& x : d) x *= gamma;
    }
    for (std::size_t k = 0; k < s_.size(); ++k) {
      const double b = dot(y_[k], d) / dot(y_[k], s_[k]);
      for (std::size_t i = 0; i < d.size(); ++i) d[i] += (a[k] - b) * s_[k][i];
    }
    return d;
  }

 private:
  int memory_;
  std::vector<std::vector<double>> s_, y_;
};

// u - lambda * d on interior vertices.
MeshFunction step(const MeshFunction& u, const std::vector<double>& d, double lambda) {
  std::vector<double> interior = u.interior_values();
  for (std::size_t i = 0; i < interior.size(); ++i) interior[i] -= lambda * d[i];
  return MeshFunction::from_interior(u.mesh_ptr(), interior);
}

// Energy drop accepted by the line search; tiny increases at round-off level
// are tolerated so that the iteration does not stall right before tol.
bool sufficient_decrease(double trial, double current, double armijo, double lambda, double slope) {
  if (trial <= current - armijo * lambda * slope) return true;
  return trial - current <= 1e-12 * std::max(1.0, std::abs(current));
}

// ---------------------------------------------------------------------------
// Rays

double far_parameter(const Problem& pb, const MeshFunction& w, Truncation trunc, double t0,
                     double level) {
  double t = t0;
  for (int k = 0; k <= 60; ++k) {
    if (energy(t * MeshFunction(w), pb, trunc) < level) return t;
    t *= 2.0;
  }
  throw ConfigurationError(
      "no far endpoint within 60 doublings: the nonlinearity is not superlinear on this mesh");
}

struct RayMax {
  double t = 0.0;
  double energy = 0.0;
  double t_end = 0.0;
};

RayMax ray_maximum(const Problem& pb, const MeshFunction& w, Truncation trunc, double t_end,
                   int nodes) {
  const auto phi_at = [&](double t) { return energy(t * MeshFunction(w), pb, trunc); };
  const auto slope_at = [&](double t) { return pairing(t * MeshFunction(w), w, pb, trunc); };
  const int n = std::max(nodes, 4);
  if (!(phi_at(t_end) < 0.0)) t_end = far_parameter(pb, w, trunc, t_end, 0.0);

  for (int shrink = 0; shrink < 60; ++shrink) {
    int best = 0;
    double best_e = 0.0;
    std::vector<double> ts(n);
    for (int k = 0; k < n; ++k) {
      ts[k] = t_end * k / (n - 1);
      if (k == 0) continue;
      const double e = phi_at(ts[k]);
      if (e > best_e) {
        best_e = e;
        best = k;
      }
    }
    if (best == 0) {
      // Maximum lies below the first interior node.
      t_end = ts[1];
      continue;
    }
    double lo = ts[best - 1], hi = ts[best + 1];
    if (best == 1) lo = ts[1] * 1e-3;
    const double glo = slope_at(lo), ghi = slope_at(hi);
    double t = ts[best];
    if (glo > 0.0 && ghi < 0.0) {
      std::uintmax_t iters = 200;
      const auto root = boost::math::tools::toms748_solve(
          slope_at, lo, hi, glo, ghi, boost::math::tools::eps_tolerance<double>(52), iters);
      t = 0.5 * (root.first + root.second);
    } else {
      // Golden-section search on the energy.
      const double g = 0.5 * (std::sqrt(5.0) - 1.0);
      double a = lo, b = hi;
      for (int it = 0; it < 200 && b - a > 1e-15 * b; ++it) {
        const double c = b - g * (b - a), d = a + g * (b - a);
        if (phi_at(c) > phi_at(d)) b = d;
        else a = c;
      }
      t = 0.5 * (a + b);
    }
    return {t, phi_at(t), t_end};
  }
  throw ConfigurationError("ray maximum not found: energy is nonpositive along the ray");
}

}  // namespace

MountainPassPath ray_path(const Problem& problem, const MeshFunction& w, double t_end, int nodes,
                          Sign sign) {
  MountainPassPath path;
  const int n = std::max(nodes, 2);
  for (int k = 0; k < n; ++k) {
    MeshFunction node = (t_end * k / (n - 1)) * MeshFunction(w);
    path.energies.push_back(phi_truncated(node, problem, sign));
    path.nodes.push_back(std::move(node));
  }
  return path;
}

MeshFunction find_far_endpoint(const Problem& problem, const MeshFunction& direction, Sign sign) {
  if (direction.min() < 0.0 || direction.is_zero()) {
    throw std::invalid_argument("find_far_endpoint: direction must be nonnegative and nonzero");
  }
  const MeshFunction w = sign == Sign::Plus ? direction : -direction;
  const double t = far_parameter(problem, w, truncation_for(sign), 1.0, -1.0);
  return t * MeshFunction(w);
}

SolveOutcome mountain_pass(const Problem& problem, Sign sign, const SolverOptions& opts,
                           const std::optional<MeshFunction>& direction) {
  const Truncation trunc = truncation_for(sign);
  const MeshFunction dir = direction ? *direction : bump(problem.mesh_ptr());
  if (dir.min() < 0.0 || dir.is_zero()) {
    throw std::invalid_argument("mountain_pass: direction must be nonnegative and nonzero");
  }
  MeshFunction w = sign == Sign::Plus ? dir : -dir;
  double t_end = far_parameter(problem, w, trunc, 1.0, -1.0);

  Metric metric(problem, opts.preconditioner);
  const double lam_max = opts.preconditioner == Preconditioner::Secant ? 1.0 : 1e12;
  double lam = opts.preconditioner == Preconditioner::None ? 1.0 : lam_max;

  SolveOutcome out(MeshFunction(problem.mesh_ptr()));
  out.kind = sign == Sign::Plus ? SolutionKind::Positive : SolutionKind::Negative;

  RayMax cur = ray_maximum(problem, w, trunc, t_end, opts.path_nodes);
  MeshFunction u = cur.t * MeshFunction(w);
  for (int it = 0;; ++it) {
    const Residual r = residual(u, problem, trunc);
    out.trace.push_back({cur.energy, r.norm});
    out.iterations = it;
    out.solution = u;
    out.energy = cur.energy;
    out.residual_norm = r.norm;
    if (r.norm <= opts.tol) {
      out.converged = true;
      break;
    }
    if (it >= opts.max_iter) {
      out.message = "iteration budget exhausted";
      break;
    }

    metric.update(u);
    const std::vector<double> d = metric.solve(r.values);
    const double slope = dot(r.values, d);
    lam = std::min(2.0 * lam, lam_max);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, lam *= 0.5) {
      MeshFunction trial = step(u, d, lam);
      const bool usable = sign == Sign::Plus ? trial.max() > 0.0 : trial.min() < 0.0;
      if (!usable) continue;
      RayMax next;
      try {
        next = ray_maximum(problem, trial, trunc, cur.t_end / cur.t, opts.path_nodes);
      } catch (const ConfigurationError&) {
        continue;
      }
      if (sufficient_decrease(next.energy, cur.energy, opts.armijo, lam, slope)) {
        w = std::move(trial);
        cur = next;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.message = "line search failed";
      break;
    }
    if (opts.reequidistribute_every > 0 && (it + 1) % opts.reequidistribute_every == 0) {
      // Re-anchor the far end of the path just beyond the current maximum.
      cur.t_end = far_parameter(problem, w, trunc, 1.5 * cur.t, -1.0);
    }
    u = cur.t * MeshFunction(w);
  }
  return out;
}

TruncationVerdict truncation_consistency(const SolveOutcome& outcome, const Problem& problem) {
  TruncationVerdict v;
  auto [plus, minus] = split_parts(outcome.solution);
  switch (outcome.kind) {
    case SolutionKind::Positive:
      v.opposite_modular = problem.space().modular(gradient(minus));
      v.opposite_extreme = minus.max();
      break;
    case SolutionKind::Negative:
      v.opposite_modular = problem.space().modular(gradient(plus));
      v.opposite_extreme = plus.max();
      break;
    case SolutionKind::Nodal:
      v.consistent = false;
      return v;
  }
  v.consistent = v.opposite_modular <= 1e-10;
  return v;
}

SolveOutcome descend_on_M(const Problem& problem, const MeshFunction& start,
                          const SolverOptions& opts) {
  Metric metric(problem, opts.preconditioner);
  QuasiNewton history(opts.memory);
  const double lam_max = opts.preconditioner == Preconditioner::Secant ? 1.0 : 1e12;
  double lam = opts.preconditioner == Preconditioner::None ? 1.0 : lam_max;

  SolveOutcome out(MeshFunction(problem.mesh_ptr()));
  out.kind = SolutionKind::Nodal;

  NehariPair pair = project_to_M(start, problem, opts.projection);
  double e = phi(pair.projected, problem).phi;
  std::vector<double> prev_u, prev_r;
  for (int it = 0;; ++it) {
    const MeshFunction& u = pair.projected;
    const Residual r = residual(u, problem);
    out.trace.push_back({e, r.norm});
    out.iterations = it;
    out.solution = u;
    out.energy = e;
    out.residual_norm = r.norm;
    out.pair = pair;
    if (r.norm <= opts.tol) {
      out.converged = true;
      break;
    }
    if (it >= opts.max_iter) {
      out.message = "iteration budget exhausted";
      break;
    }

    // The projection moves the iterate off the straight step, so the
    // curvature pairs are taken between consecutive projected iterates.
    std::vector<double> ui = u.interior_values();
    if (!prev_u.empty()) history.push(ui, prev_u, r.values, prev_r);
    metric.update(u);
    std::vector<double> d = history.apply(metric, r.values);
    if (history.size() > 0) {
      if (dot(r.values, d) > 0.0) {
        lam = 0.5;  // doubled to a unit step below
      } else {
        history.clear();
        d = metric.solve(r.values);
      }
    }
    const double slope = dot(r.values, d);
    lam = std::min(2.0 * lam, history.size() > 0 ? 1.0 : lam_max);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls, lam *= 0.5) {
      const MeshFunction trial = step(u, d, lam);
      if (!(trial.max() > 0.0 && trial.min() < 0.0)) continue;
      std::optional<NehariPair> next;
      try {
        next = project_to_M(trial, problem, opts.projection);
      } catch (const std::runtime_error&) {
        continue;
      }
      const double ne = phi(next->projected, problem).phi;
      if (sufficient_decrease(ne, e, opts.armijo, lam, slope)) {
        pair = std::move(*next);
        e = ne;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      out.message = "line search failed";
      break;
    }
    prev_u = std::move(ui);
    prev_r = r.values;
  }
  return out;
}

MeshFunction nodal_start(const Problem& problem, std::uint64_t seed) {
  return random_bumps(problem.mesh_ptr(), seed, 4, SignMode::SignChanging);
}

SolveOutcome minimize_over_M(const Problem& problem, int starts, const SolverOptions& opts,
                             std::uint64_t seed, int workers, std::vector<SolveOutcome>* all) {
  if (starts < 1) throw std::invalid_argument("minimize_over_M: need at least one start");
  auto results = parallel_map(static_cast<std::size_t>(starts), workers, [&](std::size_t k) {
    const std::uint64_t s = seed + k;
    try {
      SolveOutcome o = descend_on_M(problem, nodal_start(problem, s), opts);
      o.seed = s;
      return o;
    } catch (const std::runtime_error& ex) {
      SolveOutcome o(MeshFunction(problem.mesh_ptr()));
      o.kind = SolutionKind::Nodal;
      o.seed = s;
      o.energy = std::numeric_limits<double>::infinity();
      o.residual_norm = std::numeric_limits<double>::infinity();
      o.message = ex.what();
      return o;
    }
  });

  std::size_t best = results.size();
  for (std::size_t k = 0; k < results.size(); ++k) {
    if (results[k].converged && (best == results.size() || results[k].energy < results[best].energy)) {
      best = k;
    }
  }
  if (best == results.size()) {
    for (std::size_t k = 0; k < results.size(); ++k) {
      if (best == results.size() || results[k].energy < results[best].energy) best = k;
    }
    results[best].message = "no start converged; best projected candidate returned (" +
                            results[best].message + ")";
  }
  SolveOutcome chosen = results[best];
  if (all) *all = std::move(results);
  return chosen;
}

std::vector<CoercivityRow> coercivity_probe(const Problem& problem, std::span<const int> scales,
                                            const ProjectionOptions& opts) {
  std::vector<CoercivityRow> rows;
  for (int s : scales) {
    CoercivityRow row;
    row.scale = s;
    try {
      const MeshFunction u = standing_wave(problem.mesh_ptr(), 2 * s);
      const NehariPair pair = project_to_M(u, problem, opts);
      const auto [plus, minus] = split_parts(pair.projected);
      row.norm = problem.space().luxemburg_norm(gradient(pair.projected));
      row.energy = phi(pair.projected, problem).phi;
      row.min_part_norm = std::min(problem.space().luxemburg_norm(gradient(plus)),
                                   problem.space().luxemburg_norm(gradient(minus)));
      row.projected = true;
    } catch (const std::exception& ex) {
      row.error = ex.what();
    }
    rows.push_back(row);
  }
  return rows;
}

bool energy_trend_increasing(std::span<const CoercivityRow> rows) {
  std::vector<const CoercivityRow*> ok;
  for (const auto& r : rows) {
    if (r.projected) ok.push_back(&r);
  }
  if (ok.size() < 2) return false;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (const auto* r : ok) {
    sx += r->norm;
    sy += r->energy;
    sxx += r->norm * r->norm;
    sxy += r->norm * r->energy;
  }
  const double n = static_cast<double>(ok.size());
  const double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
  return slope > 0.0 && ok.back()->energy > ok.front()->energy;
}

}  // namespace kdp
