#include "kdp/energy.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"

namespace kdp {

namespace {

constexpr double kEps2 = kFluxRegularization * kFluxRegularization;

double truncate(double s, Truncation trunc) {
  switch (trunc) {
    case Truncation::Positive:
      return s > 0.0 ? s : 0.0;
    case Truncation::Negative:
      return s < 0.0 ? s : 0.0;
    case Truncation::None:
      break;
  }
  return s;
}

// Adds sum_T area/3 sum_m f(u(m)) v(m) for nodal v, or per-vertex loads when
// `loads` is given.
double load_pairing(const MeshFunction& u, std::span<const double> v, const Problem& problem,
                    Truncation trunc, std::vector<double>* loads) {
  const Mesh& mesh = problem.mesh();
  const auto qp = quadrature_points(problem.rule());
  const auto tris = mesh.triangles();
  const auto areas = mesh.areas();
  const Nonlinearity& f = problem.f();
  double total = 0.0;
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const auto& tri = tris[t];
    const double w = areas[t] / 3.0;
    for (const auto& bary : qp) {
      const double s = truncate(bary[0] * u[tri[0]] + bary[1] * u[tri[1]] + bary[2] * u[tri[2]], trunc);
      const double fs = f.f(s);
      if (loads) {
        for (int k = 0; k < 3; ++k) (*loads)[tri[k]] += w * fs * bary[k];
      } else {
        const double vs = bary[0] * v[tri[0]] + bary[1] * v[tri[1]] + bary[2] * v[tri[2]];
        total += w * fs * vs;
      }
    }
  }
  return total;
}

}  // namespace

void write_energy_header(std::ostream& os) {
  os << "phi,a0_term,b0_term,potential_term,phi_H\n";
}

void write_energy_row(std::ostream& os, const EnergyReport& e) {
  const auto old = os.precision(17);
  os << e.phi << ',' << e.a0_term << ',' << e.b0_term << ',' << e.potential_term << ','
     << e.phi_H << '\n';
  os.precision(old);
}

double psi(double s, const KirchhoffCoeffs& k) {
  if (s < 0.0) throw std::invalid_argument("psi: argument must be nonnegative");
  if (k.theta == 1.0) return k.a0 + k.b0;
  return k.a0 + k.b0 * std::pow(s, k.theta - 1.0);
}

double Psi(double s, const KirchhoffCoeffs& k) {
  if (s < 0.0) throw std::invalid_argument("Psi: argument must be nonnegative");
  return k.a0 * s + k.b0 / k.theta * std::pow(s, k.theta);
}

double flux_coefficient(double grad_sq, double p, double q, double mu) {
  const double g2 = grad_sq + kEps2;
  double c = std::pow(g2, 0.5 * (p - 2.0));
  if (mu != 0.0) c += mu * std::pow(g2, 0.5 * (q - 2.0));
  return c;
}

double phi_H(const CellField& grad, const Problem& problem) {
  const ModularParts m = problem.space().parts(grad);
  return m.p_part / problem.exps().p + m.q_part / problem.exps().q;
}

double phi_H(const MeshFunction& u, const Problem& problem) {
  return phi_H(gradient(u), problem);
}

double potential(const MeshFunction& u, const Problem& problem, Truncation trunc) {
  const Nonlinearity& f = problem.f();
  return integrate_nodal(
      u, [&](Point, double s) { return f.F(truncate(s, trunc)); }, problem.rule());
}

EnergyReport phi(const MeshFunction& u, const Problem& problem) {
  EnergyReport e;
  const auto& k = problem.kirchhoff();
  e.phi_H = phi_H(u, problem);
  e.a0_term = k.a0 * e.phi_H;
  e.b0_term = k.b0 / k.theta * std::pow(e.phi_H, k.theta);
  e.potential_term = potential(u, problem);
  e.phi = e.a0_term + e.b0_term - e.potential_term;
  return e;
}

double energy(const MeshFunction& u, const Problem& problem, Truncation trunc) {
  return Psi(phi_H(u, problem), problem.kirchhoff()) - potential(u, problem, trunc);
}

double phi_truncated(const MeshFunction& u, const Problem& problem, Sign sign) {
  return energy(u, problem, truncation_for(sign));
}

Residual residual(const MeshFunction& u, const Problem& problem, Truncation trunc) {
  const Mesh& mesh = problem.mesh();
  const CellField grad = gradient(u);
  const double kirchhoff = psi(phi_H(grad, problem), problem.kirchhoff());
  const auto tris = mesh.triangles();
  const auto areas = mesh.areas();
  const auto mu = problem.mu_cells();
  const double p = problem.exps().p, q = problem.exps().q;

  std::vector<double> nodal(mesh.num_vertices(), 0.0);
  for (std::size_t t = 0; t < tris.size(); ++t) {
    const double c = kirchhoff * areas[t] * flux_coefficient(grad[t].norm2(), p, q, mu[t]);
    const auto& b = mesh.basis_gradients(t);
    for (int k = 0; k < 3; ++k) nodal[tris[t][k]] += c * grad[t].dot(b[k]);
  }
  std::vector<double> loads(mesh.num_vertices(), 0.0);
  load_pairing(u, {}, problem, trunc, &loads);

  Residual r;
  r.values.resize(mesh.num_interior());
  double sq = 0.0;
  const auto interior = mesh.interior_vertices();
  for (std::size_t i = 0; i < interior.size(); ++i) {
    const int v = interior[i];
    const double val = nodal[v] - loads[v];
    if (!std::isfinite(val)) {
      std::ostringstream msg;
      msg << "residual: non-finite entry at vertex " << v;
      throw NumericDomainError(msg.str());
    }
    r.values[i] = val;
    sq += val * val;
  }
  r.norm = std::sqrt(sq / static_cast<double>(interior.size()));
  return r;
}

double operator_pairing(const MeshFunction& u, const MeshFunction& v, const Problem& problem) {
  const Mesh& mesh = problem.mesh();
  const CellField gu = gradient(u);
  const CellField gv = gradient(v);
  const auto areas = mesh.areas();
  const auto mu = problem.mu_cells();
  const double p = problem.exps().p, q = problem.exps().q;
  double sum = 0.0;
  for (std::size_t t = 0; t < gu.size(); ++t) {
    sum += areas[t] * flux_coefficient(gu[t].norm2(), p, q, mu[t]) * gu[t].dot(gv[t]);
  }
  return sum;
}

double pairing(const MeshFunction& u, const MeshFunction& v, const Problem& problem,
               Truncation trunc) {
  const double kirchhoff = psi(phi_H(u, problem), problem.kirchhoff());
  return kirchhoff * operator_pairing(u, v, problem) -
         load_pairing(u, v.values(), problem, trunc, nullptr);
}

std::pair<double, double> pairings(const MeshFunction& u, const Problem& problem) {
  auto [plus, minus] = split_parts(u);
  return {pairing(u, plus, problem), pairing(u, -minus, problem)};
}

double dot_interior(const Residual& r, const MeshFunction& v) {
  const auto interior = v.mesh().interior_vertices();
  double sum = 0.0;
  for (std::size_t i = 0; i < interior.size(); ++i) sum += r.values[i] * v[interior[i]];
  return sum;
}

}  // namespace kdp
