#pragma once

// The sign-changing constraint set
//   M = { u : u+ != 0 != u-, <phi'(u), u+> = <phi'(u), -u-> = 0 },
// reached from any sign-changing u by rescaling its two parts.

#include <array>
#include <optional>
#include <ostream>
#include <utility>
#include <vector>

#include "kdp/energy.hpp"
#include "kdp/mesh.hpp"
#include "kdp/problem.hpp"

namespace kdp {

/// Precomputed pieces of u+ and u- so that the two-parameter family
/// alpha u+ - beta u- can be evaluated without reassembly.
class Fiber {
 public:
  /// Throws std::invalid_argument unless u is sign-changing.
  Fiber(const MeshFunction& u, const Problem& problem);

  /// Upsilon_u(alpha, beta) = phi(alpha u+ - beta u-).
  double energy(double alpha, double beta) const;
  /// Lambda_u(alpha, beta) = (<phi'(w), alpha u+>, <phi'(w), -beta u->), w = alpha u+ - beta u-.
  std::pair<double, double> lambda(double alpha, double beta) const;
  /// The integrals behind Lambda_u: with w = alpha u+ - beta u-,
  ///   d_plus = psi <A(w), u+>,   n_plus = int f(w) u+,
  ///   d_minus = -psi <A(w), u->, n_minus = -int f(w) u-,
  /// so Lambda_u = (alpha (d_plus - n_plus), beta (d_minus - n_minus)).
  struct Parts {
    double d_plus = 0.0;
    double n_plus = 0.0;
    double d_minus = 0.0;
    double n_minus = 0.0;
  };
  Parts lambda_parts(double alpha, double beta) const;

  /// psi(Phi_H(grad w)) * rho_H(grad w), the natural size of Lambda_u at (alpha, beta).
  double lambda_scale(double alpha, double beta) const;

  MeshFunction combine(double alpha, double beta) const;
  const MeshFunction& plus() const { return plus_; }
  const MeshFunction& minus() const { return minus_; }
  const Problem& problem() const { return *problem_; }

 private:
  const Problem* problem_;
  MeshFunction plus_;
  MeshFunction minus_;
  CellField grad_plus_;
  CellField grad_minus_;
  // Quadrature-point values of u+ and u-, three per triangle.
  std::vector<double> qp_plus_;
  std::vector<double> qp_minus_;
  std::vector<double> qp_weight_;
};

std::pair<double, double> lambda_map(const MeshFunction& u, const Problem& problem, double alpha,
                                     double beta);

struct Bracket {
  double eta1 = 0.0;
  double eta2 = 0.0;
  int rounds = 0;
};

struct BracketOptions {
  int face_samples = 16;
  int max_rounds = 60;
};

/// True when Lambda_u has the Poincare-Miranda sign pattern on the faces of
/// [a0, a1] x [b0, b1]: g+ > 0 at alpha = a0, g+ < 0 at alpha = a1,
/// g- > 0 at beta = b0, g- < 0 at beta = b1 (non-strict when `strict` is false).
bool faces_have_sign_pattern(const Fiber& fiber, double a0, double a1, double b0, double b1,
                             int samples, bool strict = true);

/// Throws BracketFailure when no box validates after the allowed expansions.
Bracket find_bracket(const Fiber& fiber, const BracketOptions& opts = {});
Bracket find_bracket(const MeshFunction& u, const Problem& problem,
                     const BracketOptions& opts = {});

struct ProjectionOptions {
  double tol_rel = 1e-9;
  int newton_max_iter = 60;
  double fd_step = 1e-6;
  int max_bisection_depth = 60;
  BracketOptions bracket{};
  /// Newton start; defaults to (1, 1) when it lies inside the bracket and to
  /// the geometric center of the bracket otherwise.
  std::optional<std::array<double, 2>> start;
};

struct NehariPair {
  double alpha = 0.0;
  double beta = 0.0;
  Bracket bracket;
  double g_plus = 0.0;
  double g_minus = 0.0;
  double tolerance = 0.0;
  int newton_iterations = 0;
  bool used_bisection = false;
  MeshFunction projected;
};

/// Newton on the log-ratio residual in log coordinates, then damped Newton on
/// Lambda_u with a finite-difference Jacobian, falling back
/// to Poincare-Miranda quad-tree bisection of the bracket. Throws
/// BracketFailure or ProjectionFailure.
NehariPair project_to_M(const MeshFunction& u, const Problem& problem,
                        const ProjectionOptions& opts = {});
NehariPair project_to_M(const Fiber& fiber, const ProjectionOptions& opts = {});

/// Upsilon_u sampled on a tensor grid; values[i * betas.size() + j] is at (alphas[i], betas[j]).
struct FiberSample {
  std::vector<double> alphas;
  std::vector<double> betas;
  std::vector<double> values;

  double at(std::size_t i, std::size_t j) const { return values[i * betas.size() + j]; }
  void write(std::ostream& os) const;
};

struct FiberReport {
  FiberSample sample;
  double pair_value = 0.0;
  double max_value = 0.0;
  std::array<double, 2> argmax{};
  /// Upsilon at the pair dominates every sample up to 1e-10 slack.
  bool max_at_pair = false;
  /// The grid argmax is the grid point nearest the pair.
  bool argmax_nearest_pair = false;
  double boundary_max = 0.0;
  bool boundary_below = false;
  double origin_value = 0.0;
  double outer_radius = 0.0;
  bool outer_shell_negative = false;
};

/// Samples Upsilon_u on [0, 3 eta2]^2 with an axis grid that is linear on
/// [0, pair] and geometric beyond, so the pair itself is a grid node.
/// The outer shell is pushed out by doubling until Upsilon is negative on it.
FiberReport fiber_max_check(const MeshFunction& u, const Problem& problem, const NehariPair& pair,
                            int grid_n);

/// Axis used by fiber_max_check: n points, linear up to `pivot`, geometric to `top`.
std::vector<double> hybrid_axis(int n, double pivot, double top);

struct SignCaseResult {
  int which = 0;  // 1..4 for cases (i)..(iv)
  bool holds = false;
  /// Positive exactly when the expected strict sign holds.
  double margin = 0.0;
};

struct SignCaseVerdict {
  double alpha = 0.0;
  double beta = 0.0;
  double g_plus = 0.0;
  double g_minus = 0.0;
  std::vector<SignCaseResult> cases;
  bool skipped = false;

  bool holds() const;
};

/// For u in M, evaluates Lambda_u(alpha, beta) and checks the strict sign
/// predicted in every sign region (alpha, beta) belongs to. Points lying in
/// no region (e.g. alpha = 1 = beta) are reported as skipped.
SignCaseVerdict sign_case_check(const MeshFunction& u, const Problem& problem, double alpha,
                                double beta);

}  // namespace kdp
