#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "kdp/energy.hpp"
#include "kdp/errors.hpp"
#include "kdp/fields.hpp"
#include "kdp/nehari.hpp"
#include "support.hpp"

using namespace kdp;
using kdp::test::rel_err;

namespace {

MeshFunction sign_changing(const Problem& pb, std::mt19937_64& rng) {
  return random_bumps(pb.mesh_ptr(), rng, 4, SignMode::SignChanging);
}

}  // namespace

TEST_CASE("lambda map basics") {
  const Problem pb(test::small_spec(12));
  const MeshFunction pos = bump(pb.mesh_ptr());
  CHECK_THROWS_AS(lambda_map(pos, pb, 1.0, 1.0), std::invalid_argument);
  CHECK_THROWS_AS(Fiber(pos, pb), std::invalid_argument);

  std::mt19937_64 rng(1);
  const MeshFunction u = sign_changing(pb, rng);
  const auto [gp, gm] = lambda_map(u, pb, 1.0, 1.0);
  const auto [pp, pm] = pairings(u, pb);
  CHECK(rel_err(gp, pp) < 1e-12);
  CHECK(rel_err(gm, pm) < 1e-12);

  const Fiber fiber(u, pb);
  CHECK(rel_err(fiber.energy(0.7, 1.3), phi(fiber.combine(0.7, 1.3), pb).phi) < 1e-12);

  SUBCASE("reparametrization identity") {
    for (double c : {0.25, 2.0, 8.0}) {
      const MeshFunction cu = c * MeshFunction(u);
      for (auto [a, b] : {std::pair{0.3, 1.1}, std::pair{2.0, 0.5}}) {
        const auto l1 = lambda_map(cu, pb, a, b);
        const auto l2 = lambda_map(u, pb, c * a, c * b);
        CHECK(rel_err(l1.first, l2.first) < 1e-13);
        CHECK(rel_err(l1.second, l2.second) < 1e-13);
      }
    }
  }
}

TEST_CASE("symmetric field on a symmetric problem") {
  ProblemSpec s = test::small_spec(12);
  s.mu = Weight::constant(1.0);
  const Problem pb(s);
  // Odd under x -> 1 - x, which maps the criss-cross mesh onto itself.
  const MeshFunction u = standing_wave(pb.mesh_ptr(), 2);
  for (double a : {0.3, 1.0, 4.0}) {
    const auto [gp, gm] = lambda_map(u, pb, a, a);
    CHECK(rel_err(gp, gm) < 1e-10);
  }
}

TEST_CASE("bracket") {
  const Problem pb(test::small_spec(12));
  std::mt19937_64 rng(2);
  for (int k = 0; k < 5; ++k) {
    const MeshFunction u = sign_changing(pb, rng);
    const Fiber fiber(u, pb);
    const Bracket br = find_bracket(fiber);
    CHECK(br.eta1 < br.eta2);
    CHECK(faces_have_sign_pattern(fiber, br.eta1, br.eta2, br.eta1, br.eta2, 64, true));
  }

  SUBCASE("scaled input gives a consistent pair") {
    const MeshFunction u = sign_changing(pb, rng);
    const NehariPair a = project_to_M(u, pb);
    const NehariPair b = project_to_M(4.0 * MeshFunction(u), pb);
    CHECK(rel_err(b.alpha, a.alpha / 4.0) < 1e-6);
    CHECK(rel_err(b.beta, a.beta / 4.0) < 1e-6);
    CHECK(b.bracket.eta1 <= b.alpha);
    CHECK(b.alpha <= b.bracket.eta2);
  }

  SUBCASE("sub-q theta nonlinearity has no bracket") {
    ProblemSpec s = test::small_spec(12);
    s.f.terms = {PowerTerm{1.0, 2.5}};
    const Problem bad(s);
    const MeshFunction u = random_bumps(bad.mesh_ptr(), rng, 4, SignMode::SignChanging);
    CHECK_THROWS_AS(find_bracket(u, bad), BracketFailure);
    CHECK_THROWS_AS(project_to_M(u, bad), BracketFailure);
  }
}

TEST_CASE("projection") {
  const Problem pb(test::small_spec(12));
  std::mt19937_64 rng(3);

  SUBCASE("invariants and idempotence") {
    for (int k = 0; k < 5; ++k) {
      const MeshFunction u = sign_changing(pb, rng);
      const NehariPair pr = project_to_M(u, pb);
      CHECK(pr.alpha >= pr.bracket.eta1);
      CHECK(pr.beta <= pr.bracket.eta2);
      CHECK(std::max(std::abs(pr.g_plus), std::abs(pr.g_minus)) <= pr.tolerance);
      CHECK(pr.projected.max() > 0.0);
      CHECK(pr.projected.min() < 0.0);
      const auto [gp, gm] = pairings(pr.projected, pb);
      const double scale = psi(phi_H(pr.projected, pb), pb.kirchhoff()) *
                           pb.space().modular(gradient(pr.projected));
      CHECK(std::abs(gp) <= 1e-8 * scale);
      CHECK(std::abs(gm) <= 1e-8 * scale);
      const NehariPair again = project_to_M(pr.projected, pb);
      CHECK(std::abs(again.alpha - 1.0) < 1e-6);
      CHECK(std::abs(again.beta - 1.0) < 1e-6);
    }
  }

  SUBCASE("independent starts agree") {
    const MeshFunction u = sign_changing(pb, rng);
    const Fiber fiber(u, pb);
    const NehariPair ref = project_to_M(fiber);
    const Bracket br = ref.bracket;
    const std::vector<std::array<double, 2>> starts{{br.eta1, br.eta1}, {br.eta1, br.eta2},
                                                    {br.eta2, br.eta1}, {br.eta2, br.eta2},
                                                    {0.5 * (br.eta1 + br.eta2), 0.5 * (br.eta1 + br.eta2)}};
    for (const auto& st : starts) {
      ProjectionOptions opts;
      opts.start = st;
      const NehariPair pr = project_to_M(fiber, opts);
      CHECK(rel_err(pr.alpha, ref.alpha) < 1e-6);
      CHECK(rel_err(pr.beta, ref.beta) < 1e-6);
    }
  }

  SUBCASE("box bisection fallback") {
    const MeshFunction u = sign_changing(pb, rng);
    const NehariPair ref = project_to_M(u, pb);
    ProjectionOptions opts;
    opts.newton_max_iter = 0;
    const NehariPair pr = project_to_M(u, pb, opts);
    CHECK(pr.used_bisection);
    CHECK(rel_err(pr.alpha, ref.alpha) < 1e-6);
    CHECK(rel_err(pr.beta, ref.beta) < 1e-6);
  }

  SUBCASE("ordering from the pairing signs") {
    // Dilations of a point on M land on both sides of it; raw draws are
    // included as they come.
    const NehariPair base = project_to_M(sign_changing(pb, rng), pb);
    std::vector<MeshFunction> inputs;
    for (double t : {0.2, 0.6, 0.9, 1.1, 1.7, 5.0}) inputs.push_back(t * MeshFunction(base.projected));
    for (int k = 0; k < 3; ++k) inputs.push_back(sign_changing(pb, rng));
    int below = 0, above = 0;
    for (const MeshFunction& u : inputs) {
      const auto [gp, gm] = pairings(u, pb);
      const NehariPair pr = project_to_M(u, pb);
      if (gp <= 0.0 && gm <= 0.0) {
        ++below;
        CHECK(pr.alpha <= 1.0 + 1e-8);
        CHECK(pr.beta <= 1.0 + 1e-8);
      }
      if (gp >= 0.0 && gm >= 0.0) {
        ++above;
        CHECK(pr.alpha >= 1.0 - 1e-8);
        CHECK(pr.beta >= 1.0 - 1e-8);
      }
    }
    CHECK(below > 0);
    CHECK(above > 0);
  }
}

TEST_CASE("closed-form scalar root") {
  ProblemSpec s = test::small_spec(16);
  s.kirchhoff = {0.0, 1.0, 1.0};
  s.mu = Weight::constant(0.0);
  const Problem pb(s);
  const double p = s.exps.p, r = 4.0;
  std::mt19937_64 rng(4);
  for (int k = 0; k < 5; ++k) {
    const MeshFunction u = test::separated_field(pb.mesh_ptr(), rng);
    const auto [plus, minus] = split_parts(u);
    // Independent integrals: gradient by Cramer's rule, midpoint rule for (u+)^r.
    const Mesh& m = pb.mesh();
    double grad_p = 0.0, pot = 0.0;
    for (std::size_t t = 0; t < m.num_triangles(); ++t) {
      const auto c = test::corners(m, t);
      const auto& tri = m.triangles()[t];
      const double area = test::tri_area(c);
      const Vec2 g = test::affine_gradient(c, plus[tri[0]], plus[tri[1]], plus[tri[2]]);
      grad_p += area * std::pow(std::hypot(g.x, g.y), p);
      for (const auto& b : test::midpoints()) {
        const double v = b[0] * plus[tri[0]] + b[1] * plus[tri[1]] + b[2] * plus[tri[2]];
        pot += area / 3.0 * std::pow(v, r);
      }
    }
    const double alpha = std::pow(grad_p / pot, 1.0 / (r - p));
    const NehariPair pr = project_to_M(u, pb);
    CHECK(rel_err(pr.alpha, alpha) < 1e-8);
  }
}

TEST_CASE("sign cases and fiber maximum") {
  const Problem pb(test::small_spec(12));
  std::mt19937_64 rng(5);
  const NehariPair pr = project_to_M(sign_changing(pb, rng), pb);
  const MeshFunction& y = pr.projected;

  const SignCaseVerdict c1 = sign_case_check(y, pb, 2.0, 1.0);
  CHECK(c1.holds());
  CHECK(c1.g_plus < 0.0);
  const SignCaseVerdict c2 = sign_case_check(y, pb, 0.5, 0.7);
  CHECK(c2.holds());
  CHECK(c2.g_plus > 0.0);
  const SignCaseVerdict c4 = sign_case_check(y, pb, 0.7, 0.5);
  CHECK(c4.holds());
  CHECK(c4.g_minus > 0.0);
  CHECK(sign_case_check(y, pb, 1.0, 3.0).holds());
  CHECK(sign_case_check(y, pb, 1.0, 1.0).skipped);

  const NehariPair self = project_to_M(y, pb);
  const FiberReport rep = fiber_max_check(y, pb, self, 21);
  CHECK(rep.max_at_pair);
  CHECK(rep.argmax_nearest_pair);
  CHECK(rep.boundary_below);
  CHECK(rep.origin_value == 0.0);
  CHECK(rep.pair_value > 0.0);
  CHECK(rep.outer_shell_negative);
  for (double v : rep.sample.values) CHECK(std::isfinite(v));
  std::ostringstream os;
  rep.sample.write(os);
  CHECK(os.str().rfind("# alpha,beta,upsilon", 0) == 0);

  const auto axis = hybrid_axis(41, 1.0, 30.0);
  CHECK(axis.size() == 41);
  CHECK(axis.front() == 0.0);
  CHECK(std::count(axis.begin(), axis.end(), 1.0) == 1);
  CHECK(axis.back() == 30.0);
  CHECK(std::is_sorted(axis.begin(), axis.end()));
}
