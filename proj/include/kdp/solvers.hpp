#pragma once

// Critical point solvers: a ray-based mountain-pass iteration for the
// constant-sign solutions and descent with reprojection onto M for the
// least-energy nodal solution.

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "kdp/energy.hpp"
#include "kdp/mesh.hpp"
#include "kdp/nehari.hpp"
#include "kdp/problem.hpp"

namespace kdp {

/// Metric used to turn the residual into a descent direction.
///   None:      raw residual.
///   Laplacian: discrete Dirichlet Laplacian (H1 gradient).
///   Secant:    stiffness matrix weighted by the current flux coefficients,
///              psi * (|grad u|^(p-2) + mu |grad u|^(q-2)).
enum class Preconditioner { None, Laplacian, Secant };

std::string to_string(Preconditioner p);
Preconditioner parse_preconditioner(const std::string& name);

struct SolverOptions {
  double tol = 1e-6;
  int max_iter = 3000;
  Preconditioner preconditioner = Preconditioner::Secant;
  double armijo = 1e-4;
  int path_nodes = 16;
  int reequidistribute_every = 10;
  /// Curvature pairs kept by the quasi-Newton update in descend_on_M;
  /// 0 gives plain preconditioned descent.
  int memory = 10;
  ProjectionOptions projection{};
};

enum class SolutionKind { Positive, Negative, Nodal };

std::string to_string(SolutionKind k);

struct TraceEntry {
  double energy = 0.0;
  double residual = 0.0;
};

struct SolveOutcome {
  explicit SolveOutcome(MeshFunction s) : solution(std::move(s)) {}

  MeshFunction solution;
  SolutionKind kind = SolutionKind::Positive;
  double energy = 0.0;
  double residual_norm = 0.0;
  int iterations = 0;
  bool converged = false;
  std::vector<TraceEntry> trace;
  std::optional<NehariPair> pair;
  std::uint64_t seed = 0;
  std::string message;
};

/// Checks the sign invariant of the outcome's kind and, when converged, its
/// residual bound. `tol_sign` bounds the wrong-signed nodal values.
bool satisfies_invariants(const SolveOutcome& out, double tol, double tol_sign = 1e-10);

/// Path from 0 to a far endpoint with negative truncated energy.
struct MountainPassPath {
  std::vector<MeshFunction> nodes;
  std::vector<double> energies;
};

/// Straight path t * w, t in [0, t_end], with `nodes` equidistributed nodes.
MountainPassPath ray_path(const Problem& problem, const MeshFunction& w, double t_end, int nodes,
                          Sign sign);

/// sign * t * direction with phi_sign below -1, found by doubling t.
/// Throws ConfigurationError when 60 doublings do not reach it.
MeshFunction find_far_endpoint(const Problem& problem, const MeshFunction& direction, Sign sign);

/// Mountain-pass iteration on phi_+ (sign Plus) or phi_- (sign Minus).
/// `direction` (>= 0) seeds the initial path; the sine bump by default.
SolveOutcome mountain_pass(const Problem& problem, Sign sign, const SolverOptions& opts,
                           const std::optional<MeshFunction>& direction = std::nullopt);

struct TruncationVerdict {
  /// Modular of the gradient of the wrong-signed part.
  double opposite_modular = 0.0;
  /// Most wrong-signed nodal value (<= 0 means none).
  double opposite_extreme = 0.0;
  bool consistent = false;
};

TruncationVerdict truncation_consistency(const SolveOutcome& outcome, const Problem& problem);

/// Descent with reprojection from one start.
SolveOutcome descend_on_M(const Problem& problem, const MeshFunction& start,
                          const SolverOptions& opts);

/// Start used for seed `seed` by minimize_over_M.
MeshFunction nodal_start(const Problem& problem, std::uint64_t seed);

/// Runs `starts` independent descents (seeds seed, seed+1, ...) on up to
/// `workers` threads and returns the lowest-energy converged outcome; ties go
/// to the earlier seed. When nothing converges the lowest-energy candidate is
/// returned with converged = false. Every outcome is copied to `all`.
SolveOutcome minimize_over_M(const Problem& problem, int starts, const SolverOptions& opts,
                             std::uint64_t seed = 42, int workers = 1,
                             std::vector<SolveOutcome>* all = nullptr);

struct CoercivityRow {
  double scale = 0.0;
  double norm = 0.0;
  double energy = 0.0;
  double min_part_norm = 0.0;
  bool projected = false;
  std::string error;
};

/// Projects the standing waves of frequency 2*scale onto M and tabulates
/// (Luxemburg norm, energy) of the projections.
std::vector<CoercivityRow> coercivity_probe(const Problem& problem, std::span<const int> scales,
                                            const ProjectionOptions& opts = {});

/// Energy grows with the norm along the table: positive least-squares slope
/// and last row above first.
bool energy_trend_increasing(std::span<const CoercivityRow> rows);

}  // namespace kdp
