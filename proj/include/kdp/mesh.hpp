#pragma once

// Criss-cross P1 triangulations of rectangles, nodal fields, cellwise
// gradients and the quadrature rules shared by every energy integral.

#include <array>
#include <cstddef>
#include <functional>
#include <iosfwd>
#include <memory>
#include <span>
#include <utility>
#include <vector>

namespace kdp {

struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Vec2 {
  double x = 0.0;
  double y = 0.0;

  double dot(const Vec2& o) const { return x * o.x + y * o.y; }
  double norm2() const { return x * x + y * y; }
};

inline Vec2 operator+(Vec2 a, Vec2 b) { return {a.x + b.x, a.y + b.y}; }
inline Vec2 operator-(Vec2 a, Vec2 b) { return {a.x - b.x, a.y - b.y}; }
inline Vec2 operator*(double s, Vec2 a) { return {s * a.x, s * a.y}; }

struct Rect {
  double x0 = 0.0;
  double x1 = 1.0;
  double y0 = 0.0;
  double y1 = 1.0;

  double area() const { return (x1 - x0) * (y1 - y0); }
};

/// Quadrature on a single triangle. Both rules have three points with
/// weight area/3; the edge-midpoint rule integrates quadratics exactly.
enum class QuadratureRule { VertexAverage, EdgeMidpoint };

/// Barycentric coordinates of the three quadrature points of `rule`.
std::array<std::array<double, 3>, 3> quadrature_points(QuadratureRule rule);

using Triangle = std::array<int, 3>;

class Mesh {
 public:
  /// Uniform criss-cross triangulation: each of the nx*ny cells is split by
  /// a diagonal whose direction alternates in a checkerboard pattern.
  /// Throws std::invalid_argument for nx, ny < 2 or a degenerate rectangle.
  static std::shared_ptr<const Mesh> build(const Rect& rect, int nx, int ny);

  const Rect& rect() const { return rect_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }

  std::size_t num_vertices() const { return vertices_.size(); }
  std::size_t num_triangles() const { return triangles_.size(); }
  std::size_t num_interior() const { return interior_.size(); }

  std::span<const Point> vertices() const { return vertices_; }
  std::span<const Triangle> triangles() const { return triangles_; }
  std::span<const double> areas() const { return areas_; }
  double total_area() const { return total_area_; }

  bool is_interior(std::size_t v) const { return interior_index_[v] >= 0; }
  /// Position of vertex v among interior vertices, or -1 on the boundary.
  int interior_index(std::size_t v) const { return interior_index_[v]; }
  std::span<const int> interior_vertices() const { return interior_; }

  /// Gradients of the three barycentric basis functions of triangle t.
  const std::array<Vec2, 3>& basis_gradients(std::size_t t) const {
    return basis_grads_[t];
  }

  /// Physical location of barycentric point `bary` in triangle t.
  Point map_point(std::size_t t, const std::array<double, 3>& bary) const;

  void write(std::ostream& os) const;

 private:
  Mesh() = default;

  Rect rect_;
  int nx_ = 0;
  int ny_ = 0;
  std::vector<Point> vertices_;
  std::vector<Triangle> triangles_;
  std::vector<double> areas_;
  std::vector<std::array<Vec2, 3>> basis_grads_;
  std::vector<int> interior_index_;
  std::vector<int> interior_;
  double total_area_ = 0.0;
};

using MeshPtr = std::shared_ptr<const Mesh>;

/// Piecewise-constant gradient field, one vector per triangle.
using CellField = std::vector<Vec2>;

/// P1 nodal field vanishing on the Dirichlet boundary.
class MeshFunction {
 public:
  /// Zero field.
  explicit MeshFunction(MeshPtr mesh);
  /// Throws std::invalid_argument if the size is wrong or a boundary value
  /// is nonzero.
  MeshFunction(MeshPtr mesh, std::vector<double> values);

  /// Builds a field from interior values only; boundary entries are zero.
  static MeshFunction from_interior(MeshPtr mesh, std::span<const double> interior);
  /// Interpolates g at the vertices and forces boundary values to zero.
  static MeshFunction interpolate(MeshPtr mesh, const std::function<double(Point)>& g);

  const Mesh& mesh() const { return *mesh_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  std::span<const double> values() const { return values_; }
  double operator[](std::size_t i) const { return values_[i]; }
  std::size_t size() const { return values_.size(); }

  std::vector<double> interior_values() const;

  double min() const;
  double max() const;
  bool is_zero() const;

  /// Discrete L2 norm via the vertex-average rule.
  double l2_norm() const;

  MeshFunction operator-() const;
  MeshFunction& operator+=(const MeshFunction& o);
  MeshFunction& operator-=(const MeshFunction& o);
  MeshFunction& operator*=(double s);

 private:
  MeshPtr mesh_;
  std::vector<double> values_;
};

MeshFunction operator+(MeshFunction a, const MeshFunction& b);
MeshFunction operator-(MeshFunction a, const MeshFunction& b);
MeshFunction operator*(double s, MeshFunction a);

/// a*u + b*v.
MeshFunction combine(double a, const MeshFunction& u, double b, const MeshFunction& v);

/// Cellwise gradient of the P1 interpolant of arbitrary nodal values.
CellField gradient(const Mesh& mesh, std::span<const double> values);
CellField gradient(const MeshFunction& u);

/// Sum of w[t] * area(t). Throws std::invalid_argument on length mismatch.
double integrate_cells(const Mesh& mesh, std::span<const double> w);

using PointwiseIntegrand = std::function<double(Point, double)>;

/// Quadrature of g(x, u(x)) over the domain. Throws NumericDomainError naming
/// the triangle when g is not finite.
double integrate_nodal(const MeshFunction& u, const PointwiseIntegrand& g,
                       QuadratureRule rule = QuadratureRule::EdgeMidpoint);

/// Nodal truncation: (max(u,0), max(-u,0)).
std::pair<MeshFunction, MeshFunction> split_parts(const MeshFunction& u);

/// Zeroes every vertex that shares a triangle with a vertex of opposite
/// strict sign. Afterwards no triangle carries both signs, so u+ and u-
/// have disjoint discrete supports.
MeshFunction separate_signs(const MeshFunction& u);

/// Number of triangles with both a strictly positive and a strictly negative
/// vertex.
std::size_t count_mixed_triangles(const MeshFunction& u);

}  // namespace kdp
