#include <cmath>
#include <random>
#include <sstream>
#include <stdexcept>

#include "doctest.h"
#include "kdp/errors.hpp"
#include "kdp/mesh.hpp"
#include "support.hpp"

using namespace kdp;
using kdp::test::rel_err;

TEST_CASE("mesh construction") {
  SUBCASE("counts below two are rejected") {
    CHECK_THROWS_AS(Mesh::build(Rect{}, 1, 1), std::invalid_argument);
    CHECK_THROWS_AS(Mesh::build(Rect{}, 2, 1), std::invalid_argument);
    CHECK_THROWS_AS(Mesh::build(Rect{0, 0, 0, 1}, 4, 4), std::invalid_argument);
  }
  SUBCASE("unit square 2x2") {
    const auto m = Mesh::build(Rect{}, 2, 2);
    CHECK(m->num_triangles() == 8);
    CHECK(m->total_area() == doctest::Approx(1.0).epsilon(1e-15));
    CHECK(m->num_interior() == 1);
  }
  SUBCASE("[0,2]x[0,1] with 4x2 cells") {
    const auto m = Mesh::build(Rect{0, 2, 0, 1}, 4, 2);
    CHECK(m->num_triangles() == 16);
    CHECK(m->total_area() == doctest::Approx(2.0).epsilon(1e-15));
  }
  SUBCASE("positive areas and boundary flags") {
    const Rect r{-1, 2, 0.5, 1.5};
    const auto m = Mesh::build(r, 7, 5);
    for (double a : m->areas()) CHECK(a > 0.0);
    for (std::size_t v = 0; v < m->num_vertices(); ++v) {
      const Point p = m->vertices()[v];
      const bool edge = p.x == r.x0 || p.x == r.x1 || p.y == r.y0 || p.y == r.y1;
      CHECK(edge == !m->is_interior(v));
    }
    CHECK(m->num_interior() == 6u * 4u);
  }
  SUBCASE("structured text output") {
    const auto m = Mesh::build(Rect{}, 2, 2);
    std::ostringstream os;
    m->write(os);
    const std::string s = os.str();
    CHECK(s.find("# vertex,x,y,boundary") != std::string::npos);
    CHECK(s.find("# triangle,v0,v1,v2") != std::string::npos);
  }
}

TEST_CASE("mesh function admissibility") {
  const auto m = Mesh::build(Rect{}, 3, 3);
  std::vector<double> v(m->num_vertices(), 0.0);
  v[0] = 1.0;
  CHECK_THROWS_AS(MeshFunction(m, v), std::invalid_argument);
  CHECK_THROWS_AS(MeshFunction(m, std::vector<double>(3, 0.0)), std::invalid_argument);
  const MeshFunction u = MeshFunction::interpolate(m, [](Point p) { return p.x + 1.0; });
  for (std::size_t i = 0; i < u.size(); ++i) {
    if (!m->is_interior(i)) CHECK(u[i] == 0.0);
  }
}

TEST_CASE("gradient") {
  SUBCASE("zero field") {
    const auto m = Mesh::build(Rect{}, 4, 4);
    for (const Vec2& g : gradient(MeshFunction(m))) {
      CHECK(g.x == 0.0);
      CHECK(g.y == 0.0);
    }
  }
  SUBCASE("affine data is reproduced exactly") {
    const auto m = Mesh::build(Rect{0, 2, -1, 1}, 5, 3);
    std::vector<double> vals;
    for (const Point& p : m->vertices()) vals.push_back(p.x);
    for (const Vec2& g : gradient(*m, vals)) {
      CHECK(g.x == doctest::Approx(1.0).epsilon(1e-13));
      CHECK(std::abs(g.y) < 1e-13);
    }
    vals.clear();
    for (const Point& p : m->vertices()) vals.push_back(3.0 - 2.0 * p.x + 0.5 * p.y);
    for (const Vec2& g : gradient(*m, vals)) {
      CHECK(g.x == doctest::Approx(-2.0).epsilon(1e-13));
      CHECK(g.y == doctest::Approx(0.5).epsilon(1e-13));
    }
  }
  SUBCASE("dense matrix oracle on a 3x3 mesh") {
    const auto m = Mesh::build(Rect{}, 3, 3);
    std::mt19937_64 rng(7);
    const MeshFunction u = test::random_field(m, rng);
    // Dense operator: row (t, component), column vertex.
    const std::size_t nt = m->num_triangles(), nv = m->num_vertices();
    std::vector<double> dense(2 * nt * nv, 0.0);
    for (std::size_t t = 0; t < nt; ++t) {
      const auto c = test::corners(*m, t);
      for (int k = 0; k < 3; ++k) {
        std::array<double, 3> e{0, 0, 0};
        e[k] = 1.0;
        const Vec2 g = test::affine_gradient(c, e[0], e[1], e[2]);
        const int v = m->triangles()[t][k];
        dense[(2 * t) * nv + v] += g.x;
        dense[(2 * t + 1) * nv + v] += g.y;
      }
    }
    const CellField g = gradient(u);
    for (std::size_t t = 0; t < nt; ++t) {
      double gx = 0.0, gy = 0.0;
      for (std::size_t v = 0; v < nv; ++v) {
        gx += dense[(2 * t) * nv + v] * u[v];
        gy += dense[(2 * t + 1) * nv + v] * u[v];
      }
      CHECK(std::abs(g[t].x - gx) < 1e-12);
      CHECK(std::abs(g[t].y - gy) < 1e-12);
    }
  }
  SUBCASE("linearity") {
    const auto m = Mesh::build(Rect{}, 6, 5);
    std::mt19937_64 rng(11);
    const MeshFunction u = test::random_field(m, rng), v = test::random_field(m, rng);
    const double a = 1.7, b = -0.3;
    const CellField gu = gradient(u), gv = gradient(v), gw = gradient(combine(a, u, b, v));
    for (std::size_t t = 0; t < gu.size(); ++t) {
      CHECK(std::abs(gw[t].x - (a * gu[t].x + b * gv[t].x)) < 1e-13);
      CHECK(std::abs(gw[t].y - (a * gu[t].y + b * gv[t].y)) < 1e-13);
    }
  }
}

TEST_CASE("integrate_cells") {
  const auto m = Mesh::build(Rect{0, 3, 0, 2}, 9, 4);
  CHECK(integrate_cells(*m, std::vector<double>(m->num_triangles(), 1.0)) ==
        doctest::Approx(6.0).epsilon(1e-14));
  CHECK(integrate_cells(*m, std::vector<double>(m->num_triangles(), 2.5)) ==
        doctest::Approx(15.0).epsilon(1e-14));
  CHECK_THROWS_AS(integrate_cells(*m, std::vector<double>(3, 1.0)), std::invalid_argument);

  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> d(-5.0, 5.0);
  std::vector<double> w(m->num_triangles()), terms;
  for (std::size_t t = 0; t < w.size(); ++t) {
    w[t] = d(rng);
    terms.push_back(w[t] * test::tri_area(test::corners(*m, t)));
  }
  CHECK(std::abs(integrate_cells(*m, w) - test::kahan_sum(terms)) < 1e-12);
}

TEST_CASE("integrate_nodal") {
  const auto m = Mesh::build(Rect{}, 8, 8);
  for (auto rule : {QuadratureRule::VertexAverage, QuadratureRule::EdgeMidpoint}) {
    const MeshFunction zero(m);
    CHECK(integrate_nodal(zero, [](Point, double) { return 1.0; }, rule) ==
          doctest::Approx(1.0).epsilon(1e-14));
  }

  SUBCASE("P1 integrands are exact") {
    std::vector<double> hat(m->num_vertices(), 0.0);
    const int v = m->interior_vertices()[10];
    hat[v] = 1.0;
    const MeshFunction u(m, hat);
    double expected = 0.0;
    for (std::size_t t = 0; t < m->num_triangles(); ++t) {
      const auto& tri = m->triangles()[t];
      expected += m->areas()[t] / 3.0 * (u[tri[0]] + u[tri[1]] + u[tri[2]]);
    }
    for (auto rule : {QuadratureRule::VertexAverage, QuadratureRule::EdgeMidpoint}) {
      CHECK(integrate_nodal(u, [](Point, double s) { return s; }, rule) ==
            doctest::Approx(expected).epsilon(1e-14));
    }
  }

  SUBCASE("u^2 against the seven-point oracle") {
    std::mt19937_64 rng(5);
    const MeshFunction u = test::random_field(m, rng);
    double oracle = 0.0;
    for (std::size_t t = 0; t < m->num_triangles(); ++t) {
      const auto& tri = m->triangles()[t];
      const double area = test::tri_area(test::corners(*m, t));
      for (const auto& gp : test::gauss7()) {
        const double s = gp.bary[0] * u[tri[0]] + gp.bary[1] * u[tri[1]] + gp.bary[2] * u[tri[2]];
        oracle += area * gp.w * s * s;
      }
    }
    // The midpoint rule is exact on quadratics; the vertex rule is first order.
    CHECK(rel_err(integrate_nodal(u, [](Point, double s) { return s * s; },
                                  QuadratureRule::EdgeMidpoint),
                  oracle) < 1e-12);
    CHECK(rel_err(integrate_nodal(u, [](Point, double s) { return s * s; },
                                  QuadratureRule::VertexAverage),
                  oracle) < 1.0);
  }

  SUBCASE("non-finite integrand names the triangle") {
    std::mt19937_64 rng(9);
    const MeshFunction u = test::random_field(m, rng);
    try {
      integrate_nodal(u, [](Point, double) { return std::nan(""); });
      FAIL("expected NumericDomainError");
    } catch (const NumericDomainError& e) {
      CHECK(std::string(e.what()).find("triangle") != std::string::npos);
    }
  }
}

TEST_CASE("positive and negative parts") {
  const auto m = Mesh::build(Rect{}, 7, 7);
  std::mt19937_64 rng(21);
  for (int trial = 0; trial < 5; ++trial) {
    const MeshFunction u = test::random_field(m, rng);
    const auto [plus, minus] = split_parts(u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(plus[i] - minus[i] == u[i]);
      CHECK(plus[i] + minus[i] == std::abs(u[i]));
      CHECK(plus[i] * minus[i] == 0.0);
    }
    const auto [p2, m2] = split_parts(-u);
    for (std::size_t i = 0; i < u.size(); ++i) {
      CHECK(p2[i] == minus[i]);
      CHECK(m2[i] == plus[i]);
    }
  }
  const MeshFunction nonneg = MeshFunction::interpolate(m, [](Point p) { return p.x * p.y; });
  const auto [plus, minus] = split_parts(nonneg);
  CHECK(minus.is_zero());
  for (std::size_t i = 0; i < nonneg.size(); ++i) CHECK(plus[i] == nonneg[i]);

  const MeshFunction sep = separate_signs(test::random_field(m, rng));
  CHECK(count_mixed_triangles(sep) == 0);
}
