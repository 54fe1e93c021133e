#include "kdp/mesh.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"

namespace kdp {

std::array<std::array<double, 3>, 3> quadrature_points(QuadratureRule rule) {
  if (rule == QuadratureRule::VertexAverage) {
    return {{{1.0, 0.0, 0.0}, {0.0, 1.0, 0.0}, {0.0, 0.0, 1.0}}};
  }
  return {{{0.5, 0.5, 0.0}, {0.0, 0.5, 0.5}, {0.5, 0.0, 0.5}}};
}

std::shared_ptr<const Mesh> Mesh::build(const Rect& rect, int nx, int ny) {
  if (nx < 2 || ny < 2) {
    throw std::invalid_argument("build_mesh: nx and ny must be at least 2");
  }
  if (!(rect.x1 > rect.x0) || !(rect.y1 > rect.y0) || !std::isfinite(rect.area())) {
    throw std::invalid_argument("build_mesh: degenerate rectangle");
  }

  std::shared_ptr<Mesh> m(new Mesh());
  m->rect_ = rect;
  m->nx_ = nx;
  m->ny_ = ny;

  const double hx = (rect.x1 - rect.x0) / nx;
  const double hy = (rect.y1 - rect.y0) / ny;
  const auto vid = [nx](int i, int j) { return j * (nx + 1) + i; };

  m->vertices_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  m->interior_index_.reserve(static_cast<std::size_t>((nx + 1) * (ny + 1)));
  for (int j = 0; j <= ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      // Edge coordinates are pinned exactly to the rectangle.
      const double x = (i == nx) ? rect.x1 : rect.x0 + i * hx;
      const double y = (j == ny) ? rect.y1 : rect.y0 + j * hy;
      m->vertices_.push_back({x, y});
      const bool boundary = i == 0 || j == 0 || i == nx || j == ny;
      if (boundary) {
        m->interior_index_.push_back(-1);
      } else {
        m->interior_index_.push_back(static_cast<int>(m->interior_.size()));
        m->interior_.push_back(vid(i, j));
      }
    }
  }

  m->triangles_.reserve(static_cast<std::size_t>(2 * nx * ny));
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      const int a = vid(i, j), b = vid(i + 1, j), c = vid(i + 1, j + 1), d = vid(i, j + 1);
      if ((i + j) % 2 == 0) {
        m->triangles_.push_back({a, b, c});
        m->triangles_.push_back({a, c, d});
      } else {
        m->triangles_.push_back({a, b, d});
        m->triangles_.push_back({b, c, d});
      }
    }
  }

  m->areas_.reserve(m->triangles_.size());
  m->basis_grads_.reserve(m->triangles_.size());
  for (const auto& tri : m->triangles_) {
    const Point& p0 = m->vertices_[tri[0]];
    const Point& p1 = m->vertices_[tri[1]];
    const Point& p2 = m->vertices_[tri[2]];
    const double twice = (p1.x - p0.x) * (p2.y - p0.y) - (p2.x - p0.x) * (p1.y - p0.y);
    m->areas_.push_back(0.5 * twice);
    m->basis_grads_.push_back({Vec2{(p1.y - p2.y) / twice, (p2.x - p1.x) / twice},
                               Vec2{(p2.y - p0.y) / twice, (p0.x - p2.x) / twice},
                               Vec2{(p0.y - p1.y) / twice, (p1.x - p0.x) / twice}});
  }
  for (double a : m->areas_) m->total_area_ += a;
  return m;
}

Point Mesh::map_point(std::size_t t, const std::array<double, 3>& bary) const {
  const auto& tri = triangles_[t];
  Point p;
  for (int k = 0; k < 3; ++k) {
    p.x += bary[k] * vertices_[tri[k]].x;
    p.y += bary[k] * vertices_[tri[k]].y;
  }
  return p;
}

void Mesh::write(std::ostream& os) const {
  const auto old_precision = os.precision(17);
  os << "# mesh rect " << rect_.x0 << ' ' << rect_.x1 << ' ' << rect_.y0 << ' ' << rect_.y1
     << " nx " << nx_ << " ny " << ny_ << '\n';
  os << "# vertices " << vertices_.size() << '\n';
  os << "# vertex,x,y,boundary\n";
  for (std::size_t v = 0; v < vertices_.size(); ++v) {
    os << v << ',' << vertices_[v].x << ',' << vertices_[v].y << ','
       << (is_interior(v) ? 0 : 1) << '\n';
  }
  os << "# triangles " << triangles_.size() << '\n';
  os << "# triangle,v0,v1,v2\n";
  for (std::size_t t = 0; t < triangles_.size(); ++t) {
    os << t << ',' << triangles_[t][0] << ',' << triangles_[t][1] << ',' << triangles_[t][2]
       << '\n';
  }
  os.precision(old_precision);
}

// ---------------------------------------------------------------------------
// MeshFunction

MeshFunction::MeshFunction(MeshPtr mesh)
    : mesh_(std::move(mesh)), values_(mesh_->num_vertices(), 0.0) {}

MeshFunction::MeshFunction(MeshPtr mesh, std::vector<double> values)
    : mesh_(std::move(mesh)), values_(std::move(values)) {
  if (values_.size() != mesh_->num_vertices()) {
    throw std::invalid_argument("MeshFunction: value count does not match vertex count");
  }
  for (std::size_t v = 0; v < values_.size(); ++v) {
    if (!mesh_->is_interior(v) && values_[v] != 0.0) {
      std::ostringstream msg;
      msg << "MeshFunction: nonzero value on boundary vertex " << v;
      throw std::invalid_argument(msg.str());
    }
  }
}

MeshFunction MeshFunction::from_interior(MeshPtr mesh, std::span<const double> interior) {
  if (interior.size() != mesh->num_interior()) {
    throw std::invalid_argument("MeshFunction: interior value count mismatch");
  }
  std::vector<double> values(mesh->num_vertices(), 0.0);
  const auto idx = mesh->interior_vertices();
  for (std::size_t k = 0; k < idx.size(); ++k) values[idx[k]] = interior[k];
  return MeshFunction(std::move(mesh), std::move(values));
}

MeshFunction MeshFunction::interpolate(MeshPtr mesh, const std::function<double(Point)>& g) {
  std::vector<double> values(mesh->num_vertices(), 0.0);
  for (int v : mesh->interior_vertices()) values[v] = g(mesh->vertices()[v]);
  return MeshFunction(std::move(mesh), std::move(values));
}

std::vector<double> MeshFunction::interior_values() const {
  std::vector<double> out;
  out.reserve(mesh_->num_interior());
  for (int v : mesh_->interior_vertices()) out.push_back(values_[v]);
  return out;
}

double MeshFunction::min() const { return *std::min_element(values_.begin(), values_.end()); }
double MeshFunction::max() const { return *std::max_element(values_.begin(), values_.end()); }

bool MeshFunction::is_zero() const {
  return std::all_of(values_.begin(), values_.end(), [](double x) { return x == 0.0; });
}

double MeshFunction::l2_norm() const {
  double sum = 0.0;
  const auto tris = mesh_->triangles();
  const auto areas = mesh_->areas();
  for (std::size_t t = 0; t < tris.size(); ++t) {
    double s = 0.0;
    for (int v : tris[t]) s += values_[v] * values_[v];
    sum += areas[t] * s / 3.0;
  }
  return std::sqrt(sum);
}

MeshFunction MeshFunction::operator-() const {
  MeshFunction out(*this);
  for (double& x : out.values_) x = -x;
  return out;
}

MeshFunction& MeshFunction::operator+=(const MeshFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] += o.values_[i];
  return *this;
}

MeshFunction& MeshFunction::operator-=(const MeshFunction& o) {
  for (std::size_t i = 0; i < values_.size(); ++i) values_[i] -= o.values_[i];
  return *this;
}

MeshFunction& MeshFunction::operator*=(double s) {
  for (double& x : values_) x *= s;
  return *this;
}

MeshFunction operator+(MeshFunction a, const MeshFunction& b) { return a += b; }
MeshFunction operator-(MeshFunction a, const MeshFunction& b) { return a -= b; }
MeshFunction operator*(double s, MeshFunction a) { return a *= s; }

MeshFunction combine(double a, const MeshFunction& u, double b, const MeshFunction& v) {
  std::vector<double> values(u.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = a * u[i] + b * v[i];
  return MeshFunction(u.mesh_ptr(), std::move(values));
}

// ---------------------------------------------------------------------------
// Integration and gradients

CellField gradient(const Mesh& mesh, std::span<const double> values) {
  if (values.size() != mesh.num_vertices()) {
    throw std::invalid_argument("gradient: value count does not match vertex count");
  }
  const auto tris = mesh.triangles();
  CellField g(tris.size());
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& b = mesh.basis_gradients(t);
    Vec2 acc;
    for (int k = 0; k < 3; ++k) acc = acc + values[tris[t][k]] * b[k];
    g[t] = acc;
  }
  return g;
}

CellField gradient(const MeshFunction& u) { return gradient(u.mesh(), u.values()); }

double integrate_cells(const Mesh& mesh, std::span<const double> w) {
  if (w.size() != mesh.num_triangles()) {
    throw std::invalid_argument("integrate_cells: length does not match triangle count");
  }
  const auto areas = mesh.areas();
  double sum = 0.0;
  for (std::size_t t = 0; t < w.size(); ++t) sum += w[t] * areas[t];
  return sum;
}

double integrate_nodal(const MeshFunction& u, const PointwiseIntegrand& g, QuadratureRule rule) {
  const Mesh& mesh = u.mesh();
  const auto qp = quadrature_points(rule);
  const auto tris = mesh.triangles();
  const auto areas = mesh.areas();
  double sum = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    double local = 0.0;
    for (const auto& bary : qp) {
      double s = 0.0;
      for (int k = 0; k < 3; ++k) s += bary[k] * u[tris[t][k]];
      const double val = g(mesh.map_point(t, bary), s);
      if (!std::isfinite(val)) {
        std::ostringstream msg;
        msg << "integrate_nodal: non-finite integrand on triangle " << t;
        throw NumericDomainError(msg.str());
      }
      local += val;
    }
    sum += areas[t] * local / 3.0;
  }
  return sum;
}

std::pair<MeshFunction, MeshFunction> split_parts(const MeshFunction& u) {
  std::vector<double> plus(u.size()), minus(u.size());
  for (std::size_t i = 0; i < u.size(); ++i) {
    plus[i] = std::max(u[i], 0.0);
    minus[i] = std::max(-u[i], 0.0);
  }
  return {MeshFunction(u.mesh_ptr(), std::move(plus)), MeshFunction(u.mesh_ptr(), std::move(minus))};
}

MeshFunction separate_signs(const MeshFunction& u) {
  std::vector<char> drop(u.size(), 0);
  for (const auto& tri : u.mesh().triangles()) {
    bool pos = false, neg = false;
    for (int v : tri) {
      pos = pos || u[v] > 0.0;
      neg = neg || u[v] < 0.0;
    }
    if (pos && neg) {
      for (int v : tri) {
        if (u[v] != 0.0) drop[v] = 1;
      }
    }
  }
  std::vector<double> values(u.values().begin(), u.values().end());
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (drop[i]) values[i] = 0.0;
  }
  return MeshFunction(u.mesh_ptr(), std::move(values));
}

std::size_t count_mixed_triangles(const MeshFunction& u) {
  std::size_t count = 0;
  for (const auto& tri : u.mesh().triangles()) {
    bool pos = false, neg = false;
    for (int v : tri) {
      pos = pos || u[v] > 0.0;
      neg = neg || u[v] < 0.0;
    }
    if (pos && neg) ++count;
  }
  return count;
}

}  // namespace kdp
