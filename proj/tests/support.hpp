#pragma once

// Independent reference computations for the test suites. Nothing here calls
// into the library's assembly code; only plain mesh geometry is shared.

#include <array>
#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "kdp/fields.hpp"
#include "kdp/mesh.hpp"
#include "kdp/problem.hpp"

namespace kdp::test {

/// Kahan-compensated sum.
inline double kahan_sum(const std::vector<double>& xs) {
  double sum = 0.0, c = 0.0;
  for (double x : xs) {
    const double y = x - c;
    const double t = sum + y;
    c = (t - sum) - y;
    sum = t;
  }
  return sum;
}

/// Degree-5 seven-point rule on the reference triangle (barycentric points,
/// weights summing to 1).
struct GaussPoint {
  std::array<double, 3> bary;
  double w;
};

inline std::vector<GaussPoint> gauss7() {
  const double a1 = 0.059715871789770, b1 = 0.470142064105115, w1 = 0.132394152788506;
  const double a2 = 0.797426985353087, b2 = 0.101286507323456, w2 = 0.125939180544827;
  return {{{1.0 / 3, 1.0 / 3, 1.0 / 3}, 0.225},
          {{a1, b1, b1}, w1}, {{b1, a1, b1}, w1}, {{b1, b1, a1}, w1},
          {{a2, b2, b2}, w2}, {{b2, a2, b2}, w2}, {{b2, b2, a2}, w2}};
}

/// Vertex coordinates of triangle t.
inline std::array<Point, 3> corners(const Mesh& m, std::size_t t) {
  const auto& tri = m.triangles()[t];
  return {m.vertices()[tri[0]], m.vertices()[tri[1]], m.vertices()[tri[2]]};
}

inline double tri_area(const std::array<Point, 3>& c) {
  return 0.5 * std::abs((c[1].x - c[0].x) * (c[2].y - c[0].y) -
                        (c[2].x - c[0].x) * (c[1].y - c[0].y));
}

/// Gradient of the affine interpolant of (v0, v1, v2) at the corners, by
/// Cramer's rule on the two edge equations.
inline Vec2 affine_gradient(const std::array<Point, 3>& c, double v0, double v1, double v2) {
  const double e1x = c[1].x - c[0].x, e1y = c[1].y - c[0].y;
  const double e2x = c[2].x - c[0].x, e2y = c[2].y - c[0].y;
  const double d1 = v1 - v0, d2 = v2 - v0;
  const double det = e1x * e2y - e1y * e2x;
  return {(d1 * e2y - d2 * e1y) / det, (e1x * d2 - e2x * d1) / det};
}

inline Point at(const std::array<Point, 3>& c, const std::array<double, 3>& b) {
  return {b[0] * c[0].x + b[1] * c[1].x + b[2] * c[2].x,
          b[0] * c[0].y + b[1] * c[1].y + b[2] * c[2].y};
}

/// Edge midpoints in barycentric coordinates.
inline std::array<std::array<double, 3>, 3> midpoints() {
  return {{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
}

/// Reference energy: a direct loop over triangles with the edge-midpoint
/// rule for F and for mu, closed-form primitive of the power sum.
struct OracleEnergy {
  double phi = 0.0;
  double phi_H = 0.0;
  double potential = 0.0;
};

inline OracleEnergy oracle_energy(const MeshFunction& u, const ProblemSpec& s, int trunc = 0) {
  const Mesh& m = u.mesh();
  const auto prim = [&](double x) {
    double v = 0.0;
    for (const auto& t : s.f.terms) v += t.c / t.r * std::pow(std::abs(x), t.r);
    return v;
  };
  OracleEnergy e;
  for (std::size_t t = 0; t < m.num_triangles(); ++t) {
    const auto c = corners(m, t);
    const auto& tri = m.triangles()[t];
    const double area = tri_area(c);
    const Vec2 g = affine_gradient(c, u[tri[0]], u[tri[1]], u[tri[2]]);
    const double mag = std::sqrt(g.x * g.x + g.y * g.y);
    double mu = 0.0;
    for (const auto& b : midpoints()) mu += s.mu(at(c, b)) / 3.0;
    e.phi_H += area * (std::pow(mag, s.exps.p) / s.exps.p + mu * std::pow(mag, s.exps.q) / s.exps.q);
    for (const auto& b : midpoints()) {
      double val = b[0] * u[tri[0]] + b[1] * u[tri[1]] + b[2] * u[tri[2]];
      if (trunc > 0) val = std::max(val, 0.0);
      if (trunc < 0) val = std::min(val, 0.0);
      e.potential += area / 3.0 * prim(val);
    }
  }
  const auto& k = s.kirchhoff;
  e.phi = k.a0 * e.phi_H + k.b0 / k.theta * std::pow(e.phi_H, k.theta) - e.potential;
  return e;
}

/// Uniform random interior values in [-1, 1].
inline MeshFunction random_field(const MeshPtr& mesh, std::mt19937_64& rng, double scale = 1.0) {
  std::uniform_real_distribution<double> d(-scale, scale);
  std::vector<double> v(mesh->num_interior());
  for (double& x : v) x = d(rng);
  return MeshFunction::from_interior(mesh, v);
}

/// Smooth sign-changing field without mixed triangles.
inline MeshFunction separated_field(const MeshPtr& mesh, std::mt19937_64& rng) {
  for (;;) {
    MeshFunction u = separate_signs(random_bumps(mesh, rng, 4, SignMode::SignChanging));
    if (u.max() > 0.0 && u.min() < 0.0) return u;
  }
}

inline ProblemSpec small_spec(int n = 12) {
  ProblemSpec s;
  s.nx = n;
  s.ny = n;
  return s;
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(std::abs(b), 1e-300);
}

}  // namespace kdp::test
