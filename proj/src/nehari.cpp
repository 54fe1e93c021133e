#include "kdp/nehari.hpp"

#include <algorithm>
#include <boost/math/tools/toms748_solve.hpp>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"

namespace kdp {

// ---------------------------------------------------------------------------
// Fiber

Fiber::Fiber(const MeshFunction& u, const Problem& problem)
    : problem_(&problem), plus_(u.mesh_ptr()), minus_(u.mesh_ptr()) {
  auto parts = split_parts(u);
  plus_ = std::move(parts.first);
  minus_ = std::move(parts.second);
  if (plus_.is_zero() || minus_.is_zero()) {
    throw std::invalid_argument("u must be sign-changing");
  }
  grad_plus_ = gradient(plus_);
  grad_minus_ = gradient(minus_);

  const Mesh& mesh = problem.mesh();
  const auto qp = quadrature_points(problem.rule());
  const auto tris = mesh.triangles();
  const auto areas = mesh.areas();
  qp_plus_.reserve(3 * tris.size());
  qp_minus_.reserve(3 * tris.size());
  qp_weight_.reserve(3 * tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    for (const auto& b : qp) {
      double sp = 0.0, sm = 0.0;
      for (int k = 0; k < 3; ++k) {
        sp += b[k] * plus_[tris[t][k]];
        sm += b[k] * minus_[tris[t][k]];
      }
      qp_plus_.push_back(sp);
      qp_minus_.push_back(sm);
      qp_weight_.push_back(areas[t] / 3.0);
    }
  }
}

double Fiber::energy(double alpha, double beta) const {
  const Problem& pb = *problem_;
  const auto areas = pb.mesh().areas();
  const auto mu = pb.mu_cells();
  const double p = pb.exps().p, q = pb.exps().q;
  double phiH = 0.0;
  for (std::size_t t = 0; t < grad_plus_.size(); ++t) {
    const Vec2 g = alpha * grad_plus_[t] - beta * grad_minus_[t];
    const double mag = std::sqrt(g.norm2());
    if (mag == 0.0) continue;
    phiH += areas[t] * (std::pow(mag, p) / p + mu[t] * std::pow(mag, q) / q);
  }
  const Nonlinearity& f = pb.f();
  double pot = 0.0;
  for (std::size_t m = 0; m < qp_weight_.size(); ++m) {
    pot += qp_weight_[m] * f.F(alpha * qp_plus_[m] - beta * qp_minus_[m]);
  }
  return Psi(phiH, pb.kirchhoff()) - pot;
}

Fiber::Parts Fiber::lambda_parts(double alpha, double beta) const {
  const Problem& pb = *problem_;
  const auto areas = pb.mesh().areas();
  const auto mu = pb.mu_cells();
  const double p = pb.exps().p, q = pb.exps().q;
  double phiH = 0.0, op_plus = 0.0, op_minus = 0.0;
  for (std::size_t t = 0; t < grad_plus_.size(); ++t) {
    const Vec2 g = alpha * grad_plus_[t] - beta * grad_minus_[t];
    const double g2 = g.norm2();
    if (g2 == 0.0) continue;
    const double mag = std::sqrt(g2);
    phiH += areas[t] * (std::pow(mag, p) / p + mu[t] * std::pow(mag, q) / q);
    const double c = areas[t] * flux_coefficient(g2, p, q, mu[t]);
    op_plus += c * g.dot(grad_plus_[t]);
    op_minus += c * g.dot(grad_minus_[t]);
  }
  const double kirchhoff = psi(phiH, pb.kirchhoff());
  const Nonlinearity& f = pb.f();
  double load_plus = 0.0, load_minus = 0.0;
  for (std::size_t m = 0; m < qp_weight_.size(); ++m) {
    if (qp_plus_[m] == 0.0 && qp_minus_[m] == 0.0) continue;
    const double fs = f.f(alpha * qp_plus_[m] - beta * qp_minus_[m]);
    load_plus += qp_weight_[m] * fs * qp_plus_[m];
    load_minus += qp_weight_[m] * fs * qp_minus_[m];
  }
  return {kirchhoff * op_plus, load_plus, -kirchhoff * op_minus, -load_minus};
}

std::pair<double, double> Fiber::lambda(double alpha, double beta) const {
  const Parts v = lambda_parts(alpha, beta);
  return {alpha * (v.d_plus - v.n_plus), beta * (v.d_minus - v.n_minus)};
}

double Fiber::lambda_scale(double alpha, double beta) const {
  const Problem& pb = *problem_;
  const auto areas = pb.mesh().areas();
  const auto mu = pb.mu_cells();
  const double p = pb.exps().p, q = pb.exps().q;
  double phiH = 0.0, rho = 0.0;
  for (std::size_t t = 0; t < grad_plus_.size(); ++t) {
    const Vec2 g = alpha * grad_plus_[t] - beta * grad_minus_[t];
    const double mag = std::sqrt(g.norm2());
    if (mag == 0.0) continue;
    const double gp = std::pow(mag, p), gq = mu[t] * std::pow(mag, q);
    phiH += areas[t] * (gp / p + gq / q);
    rho += areas[t] * (gp + gq);
  }
  return psi(phiH, pb.kirchhoff()) * rho;
}

MeshFunction Fiber::combine(double alpha, double beta) const {
  return kdp::combine(alpha, plus_, -beta, minus_);
}

std::pair<double, double> lambda_map(const MeshFunction& u, const Problem& problem, double alpha,
                                     double beta) {
  if (alpha < 0.0 || beta < 0.0) throw std::invalid_argument("lambda_map: alpha, beta >= 0");
  return Fiber(u, problem).lambda(alpha, beta);
}

// ---------------------------------------------------------------------------
// Bracketing

bool faces_have_sign_pattern(const Fiber& fiber, double a0, double a1, double b0, double b1,
                             int samples, bool strict) {
  const int n = std::max(samples, 2);
  const auto pos = [strict](double v) { return strict ? v > 0.0 : v >= 0.0; };
  const auto neg = [strict](double v) { return strict ? v < 0.0 : v <= 0.0; };
  for (int k = 0; k < n; ++k) {
    const double s = static_cast<double>(k) / (n - 1);
    const double b = b0 + (b1 - b0) * s;
    const double a = a0 + (a1 - a0) * s;
    if (!pos(fiber.lambda(a0, b).first)) return false;
    if (!neg(fiber.lambda(a1, b).first)) return false;
    if (!pos(fiber.lambda(a, b0).second)) return false;
    if (!neg(fiber.lambda(a, b1).second)) return false;
  }
  return true;
}

Bracket find_bracket(const Fiber& fiber, const BracketOptions& opts) {
  const Problem& pb = fiber.problem();
  const double rho = pb.space().modular(gradient(fiber.combine(1.0, 1.0)));
  const double gap = pb.f().growth() - pb.exps().q * pb.kirchhoff().theta;
  double scale = 1.0;
  if (gap > 0.0 && rho > 0.0) scale = std::pow(rho, -1.0 / gap);
  if (!std::isfinite(scale) || scale <= 0.0) scale = 1.0;

  Bracket br{0.5 * std::min(1.0, scale), 2.0 * std::max(1.0, scale), 0};
  const int n = std::max(opts.face_samples, 2);
  for (int round = 0; round <= opts.max_rounds; ++round) {
    bool inner_ok = true, outer_ok = true;
    for (int k = 0; k < n && (inner_ok || outer_ok); ++k) {
      const double x = br.eta1 + (br.eta2 - br.eta1) * k / (n - 1);
      if (inner_ok && !(fiber.lambda(br.eta1, x).first > 0.0 && fiber.lambda(x, br.eta1).second > 0.0)) {
        inner_ok = false;
      }
      if (outer_ok && !(fiber.lambda(br.eta2, x).first < 0.0 && fiber.lambda(x, br.eta2).second < 0.0)) {
        outer_ok = false;
      }
    }
    br.rounds = round;
    if (inner_ok && outer_ok) return br;
    if (!inner_ok) br.eta1 *= 0.5;
    if (!outer_ok) br.eta2 *= 2.0;
  }
  std::ostringstream msg;
  msg << "find_bracket: no sign-pattern box after " << opts.max_rounds
      << " expansions (eta1=" << br.eta1 << ", eta2=" << br.eta2 << ")";
  throw BracketFailure(msg.str());
}

Bracket find_bracket(const MeshFunction& u, const Problem& problem, const BracketOptions& opts) {
  return find_bracket(Fiber(u, problem), opts);
}

// ---------------------------------------------------------------------------
// Projection

namespace {

struct NewtonResult {
  double alpha, beta;
  bool converged;
  int iterations;
};

double inf_norm(std::pair<double, double> v) {
  return std::max(std::abs(v.first), std::abs(v.second));
}

double two_norm(std::pair<double, double> v) { return std::hypot(v.first, v.second); }

bool within_tol(const Fiber& fiber, double a, double b, double tol_rel) {
  return inf_norm(fiber.lambda(a, b)) <= tol_rel * fiber.lambda_scale(a, b);
}

NewtonResult damped_newton(const Fiber& fiber, double a, double b, const Bracket& box,
                           const ProjectionOptions& opts) {
  // The unique zero lies inside the bracket, so iterates are kept in a
  // slightly enlarged copy of it.
  const double lo = 0.5 * box.eta1, hi = 2.0 * box.eta2;
  auto val = fiber.lambda(a, b);
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (inf_norm(val) <= opts.tol_rel * fiber.lambda_scale(a, b)) return {a, b, true, it};
    const double h = opts.fd_step * std::max(a, b);
    const auto da1 = fiber.lambda(a + h, b), da0 = fiber.lambda(a - h, b);
    const auto db1 = fiber.lambda(a, b + h), db0 = fiber.lambda(a, b - h);
    const double j11 = (da1.first - da0.first) / (2 * h), j21 = (da1.second - da0.second) / (2 * h);
    const double j12 = (db1.first - db0.first) / (2 * h), j22 = (db1.second - db0.second) / (2 * h);
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) return {a, b, false, it};
    const double da = -(j22 * val.first - j12 * val.second) / det;
    const double db = -(-j21 * val.first + j11 * val.second) / det;

    const double merit = two_norm(val);
    bool accepted = false;
    for (double lam = 1.0; lam > 1e-10; lam *= 0.5) {
      const double na = a + lam * da, nb = b + lam * db;
      if (!(na > lo && na < hi && nb > lo && nb < hi)) continue;
      const auto nval = fiber.lambda(na, nb);
      if (two_norm(nval) < merit) {
        a = na;
        b = nb;
        val = nval;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      return {a, b, inf_norm(val) <= opts.tol_rel * fiber.lambda_scale(a, b), it + 1};
    }
  }
  return {a, b, inf_norm(val) <= opts.tol_rel * fiber.lambda_scale(a, b), opts.newton_max_iter};
}

// Newton in (log alpha, log beta) on h = (log d+ - log n+, log d- - log n-).
// For power-type data h is nearly affine in these coordinates, so this
// converges in a few steps from anywhere in the bracket. Gives up as soon as
// one of the four integrals is not positive.
NewtonResult log_newton(const Fiber& fiber, double a, double b, const Bracket& box,
                        const ProjectionOptions& opts) {
  const double lo = std::log(0.5 * box.eta1), hi = std::log(2.0 * box.eta2);
  const auto h = [&](double s, double t, bool& ok) -> std::pair<double, double> {
    const Fiber::Parts v = fiber.lambda_parts(std::exp(s), std::exp(t));
    ok = v.d_plus > 0.0 && v.n_plus > 0.0 && v.d_minus > 0.0 && v.n_minus > 0.0;
    if (!ok) return {0.0, 0.0};
    return {std::log(v.d_plus / v.n_plus), std::log(v.d_minus / v.n_minus)};
  };
  double s = std::log(a), t = std::log(b);
  bool ok = true;
  auto val = h(s, t, ok);
  if (!ok) return {a, b, false, 0};
  for (int it = 0; it < opts.newton_max_iter; ++it) {
    if (within_tol(fiber, std::exp(s), std::exp(t), opts.tol_rel)) {
      return {std::exp(s), std::exp(t), true, it};
    }
    const double d = opts.fd_step;
    bool o1, o2, o3, o4;
    const auto ds1 = h(s + d, t, o1), ds0 = h(s - d, t, o2);
    const auto dt1 = h(s, t + d, o3), dt0 = h(s, t - d, o4);
    if (!(o1 && o2 && o3 && o4)) return {std::exp(s), std::exp(t), false, it};
    const double j11 = (ds1.first - ds0.first) / (2 * d), j21 = (ds1.second - ds0.second) / (2 * d);
    const double j12 = (dt1.first - dt0.first) / (2 * d), j22 = (dt1.second - dt0.second) / (2 * d);
    const double det = j11 * j22 - j12 * j21;
    if (!std::isfinite(det) || det == 0.0) return {std::exp(s), std::exp(t), false, it};
    const double step_s = -(j22 * val.first - j12 * val.second) / det;
    const double step_t = -(-j21 * val.first + j11 * val.second) / det;

    const double merit = two_norm(val);
    bool accepted = false;
    for (double lam = 1.0; lam > 1e-10; lam *= 0.5) {
      const double ns = s + lam * step_s, nt = t + lam * step_t;
      if (!(ns > lo && ns < hi && nt > lo && nt < hi)) continue;
      bool nok = true;
      const auto nval = h(ns, nt, nok);
      if (nok && two_norm(nval) < merit) {
        s = ns;
        t = nt;
        val = nval;
        accepted = true;
        break;
      }
    }
    if (!accepted) {
      return {std::exp(s), std::exp(t), within_tol(fiber, std::exp(s), std::exp(t), opts.tol_rel),
              it + 1};
    }
  }
  const double fa = std::exp(s), fb = std::exp(t);
  return {fa, fb, within_tol(fiber, fa, fb, opts.tol_rel), opts.newton_max_iter};
}

// Quad-tree refinement keeping a sub-box with the Poincare-Miranda face
// pattern; when no child validates at sample resolution, the child whose
// center has the smallest |Lambda| is kept.
std::array<double, 2> box_bisection(const Fiber& fiber, const Bracket& box,
                                    const ProjectionOptions& opts) {
  double a0 = box.eta1, a1 = box.eta2, b0 = box.eta1, b1 = box.eta2;
  const int samples = std::max(opts.bracket.face_samples, 2);
  for (int depth = 0; depth < opts.max_bisection_depth; ++depth) {
    const double am = std::sqrt(a0 * a1), bm = std::sqrt(b0 * b1);
    if (within_tol(fiber, am, bm, opts.tol_rel)) return {am, bm};
    if (a1 - a0 <= 1e-15 * a1 && b1 - b0 <= 1e-15 * b1) break;
    const std::array<std::array<double, 4>, 4> kids{{{a0, am, b0, bm},
                                                     {am, a1, b0, bm},
                                                     {a0, am, bm, b1},
                                                     {am, a1, bm, b1}}};
    int chosen = -1;
    for (int k = 0; k < 4 && chosen < 0; ++k) {
      if (faces_have_sign_pattern(fiber, kids[k][0], kids[k][1], kids[k][2], kids[k][3], samples,
                                  false)) {
        chosen = k;
      }
    }
    if (chosen < 0) {
      double best = std::numeric_limits<double>::infinity();
      for (int k = 0; k < 4; ++k) {
        const double r = inf_norm(fiber.lambda(0.5 * (kids[k][0] + kids[k][1]),
                                               0.5 * (kids[k][2] + kids[k][3])));
        if (r < best) {
          best = r;
          chosen = k;
        }
      }
    }
    a0 = kids[chosen][0];
    a1 = kids[chosen][1];
    b0 = kids[chosen][2];
    b1 = kids[chosen][3];
  }
  return {std::sqrt(a0 * a1), std::sqrt(b0 * b1)};
}

// Root of a sign-changing scalar function on [lo, hi] (f(lo) > 0 > f(hi)).
template <class F>
double scalar_root(F f, double lo, double hi) {
  double flo = f(lo), fhi = f(hi);
  if (!(flo > 0.0)) return lo;
  if (!(fhi < 0.0)) return hi;
  boost::uintmax_t iters = 200;
  const auto r = boost::math::tools::toms748_solve(
      f, lo, hi, flo, fhi, boost::math::tools::eps_tolerance<double>(52), iters);
  return 0.5 * (r.first + r.second);
}

// Nested one-dimensional solve: alpha(beta) zeroes the first component on
// the bracket, then beta zeroes the second along that curve.
std::array<double, 2> nested_solve(const Fiber& fiber, const Bracket& box) {
  const auto alpha_of = [&](double b) {
    return scalar_root([&](double a) { return fiber.lambda(a, b).first; }, box.eta1, box.eta2);
  };
  const double b = scalar_root(
      [&](double bb) { return fiber.lambda(alpha_of(bb), bb).second; }, box.eta1, box.eta2);
  return {alpha_of(b), b};
}

}  // namespace

NehariPair project_to_M(const Fiber& fiber, const ProjectionOptions& opts) {
  const Bracket box = find_bracket(fiber, opts.bracket);
  std::array<double, 2> start{1.0, 1.0};
  if (opts.start) {
    start = *opts.start;
  } else if (!(box.eta1 < 1.0 && 1.0 < box.eta2)) {
    const double c = std::sqrt(box.eta1 * box.eta2);
    start = {c, c};
  }

  NewtonResult res = log_newton(fiber, start[0], start[1], box, opts);
  int iterations = res.iterations;
  if (!res.converged) {
    res = damped_newton(fiber, start[0], start[1], box, opts);
    iterations += res.iterations;
  }
  bool used_bisection = false;
  if (!res.converged) {
    used_bisection = true;
    const auto center = box_bisection(fiber, box, opts);
    res = damped_newton(fiber, center[0], center[1], box, opts);
    iterations += res.iterations;
  }
  if (!res.converged) {
    const auto root = nested_solve(fiber, box);
    res = damped_newton(fiber, root[0], root[1], box, opts);
    iterations += res.iterations;
  }
  const auto val = fiber.lambda(res.alpha, res.beta);
  const double tol = opts.tol_rel * fiber.lambda_scale(res.alpha, res.beta);
  if (!res.converged || inf_norm(val) > tol) {
    std::ostringstream msg;
    msg.precision(6);
    msg << "project_to_M: no zero of Lambda_u to tolerance " << tol << " (alpha=" << res.alpha
        << ", beta=" << res.beta << ", g+=" << val.first << ", g-=" << val.second
        << ", bracket=[" << box.eta1 << "," << box.eta2 << "])";
    throw ProjectionFailure(msg.str());
  }
  return NehariPair{res.alpha,  res.beta,       box,        val.first,
                    val.second, tol,            iterations, used_bisection,
                    fiber.combine(res.alpha, res.beta)};
}

NehariPair project_to_M(const MeshFunction& u, const Problem& problem,
                        const ProjectionOptions& opts) {
  return project_to_M(Fiber(u, problem), opts);
}

// ---------------------------------------------------------------------------
// Fibering map

void FiberSample::write(std::ostream& os) const {
  const auto old = os.precision(17);
  os << "# alpha,beta,upsilon\n";
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    for (std::size_t j = 0; j < betas.size(); ++j) {
      os << alphas[i] << ',' << betas[j] << ',' << at(i, j) << '\n';
    }
  }
  os.precision(old);
}

std::vector<double> hybrid_axis(int n, double pivot, double top) {
  if (n < 3 || !(pivot > 0.0) || !(top > pivot)) {
    throw std::invalid_argument("hybrid_axis: need n >= 3 and 0 < pivot < top");
  }
  const int n_lin = n / 2 + 1;  // includes 0 and pivot
  const int n_geo = n - n_lin;
  std::vector<double> axis;
  axis.reserve(n);
  for (int k = 0; k < n_lin; ++k) axis.push_back(pivot * k / (n_lin - 1));
  axis.back() = pivot;
  const double ratio = std::pow(top / pivot, 1.0 / std::max(n_geo, 1));
  double x = pivot;
  for (int k = 1; k <= n_geo; ++k) {
    x = (k == n_geo) ? top : x * ratio;
    axis.push_back(x);
  }
  return axis;
}

FiberReport fiber_max_check(const MeshFunction& u, const Problem& problem, const NehariPair& pair,
                            int grid_n) {
  const Fiber fiber(u, problem);
  FiberReport rep;
  const double top = 3.0 * pair.bracket.eta2;
  rep.sample.alphas = hybrid_axis(grid_n, pair.alpha, std::max(top, 1.5 * pair.alpha));
  rep.sample.betas = hybrid_axis(grid_n, pair.beta, std::max(top, 1.5 * pair.beta));
  const auto& as = rep.sample.alphas;
  const auto& bs = rep.sample.betas;
  rep.sample.values.resize(as.size() * bs.size());

  rep.pair_value = fiber.energy(pair.alpha, pair.beta);
  rep.max_value = -std::numeric_limits<double>::infinity();
  rep.boundary_max = -std::numeric_limits<double>::infinity();
  std::size_t best_i = 0, best_j = 0, near_i = 0, near_j = 0;
  double near_d = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < as.size(); ++i) {
    for (std::size_t j = 0; j < bs.size(); ++j) {
      const double v = fiber.energy(as[i], bs[j]);
      rep.sample.values[i * bs.size() + j] = v;
      if (v > rep.max_value) {
        rep.max_value = v;
        best_i = i;
        best_j = j;
      }
      if (i == 0 || j == 0) rep.boundary_max = std::max(rep.boundary_max, v);
      const double d = std::hypot(as[i] - pair.alpha, bs[j] - pair.beta);
      if (d < near_d) {
        near_d = d;
        near_i = i;
        near_j = j;
      }
    }
  }
  rep.argmax = {as[best_i], bs[best_j]};
  const double slack = 1e-10 * std::max(1.0, std::abs(rep.pair_value));
  rep.max_at_pair = rep.pair_value >= rep.max_value - slack;
  rep.argmax_nearest_pair = best_i == near_i && best_j == near_j;
  rep.boundary_below = rep.boundary_max < rep.pair_value;
  rep.origin_value = rep.sample.at(0, 0);

  // Push the outer shell out until Upsilon is negative everywhere on it.
  double radius = as.back();
  for (int ext = 0; ext < 40; ++ext) {
    bool negative = true;
    const auto shell = hybrid_axis(grid_n, std::min(pair.alpha, pair.beta), radius);
    for (double s : shell) {
      if (fiber.energy(radius, s) >= 0.0 || fiber.energy(s, radius) >= 0.0) {
        negative = false;
        break;
      }
    }
    if (negative) {
      rep.outer_radius = radius;
      rep.outer_shell_negative = true;
      break;
    }
    radius *= 2.0;
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Sign cases

bool SignCaseVerdict::holds() const {
  return !skipped &&
         std::all_of(cases.begin(), cases.end(), [](const auto& c) { return c.holds; });
}

SignCaseVerdict sign_case_check(const MeshFunction& u, const Problem& problem, double alpha,
                                double beta) {
  SignCaseVerdict v;
  v.alpha = alpha;
  v.beta = beta;
  const auto [gp, gm] = lambda_map(u, problem, alpha, beta);
  v.g_plus = gp;
  v.g_minus = gm;
  const auto add = [&](int which, double margin) {
    v.cases.push_back({which, margin > 0.0, margin});
  };
  if (alpha > 1.0 && beta > 0.0 && beta <= alpha) add(1, -gp);
  if (alpha < 1.0 && alpha > 0.0 && alpha <= beta) add(2, gp);
  if (beta > 1.0 && alpha > 0.0 && alpha <= beta) add(3, -gm);
  if (beta < 1.0 && beta > 0.0 && beta <= alpha) add(4, gm);
  v.skipped = v.cases.empty();
  return v;
}

}  // namespace kdp
