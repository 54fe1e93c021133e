#include "kdp/orlicz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"

namespace kdp {

Weight Weight::constant(double c) { return {WeightFamily::Constant, {c}}; }

Weight Weight::linear(double slope, double offset) {
  return {WeightFamily::Linear, {slope, offset}};
}

Weight Weight::checkerboard(double low, double high, double period) {
  return {WeightFamily::Checkerboard, {low, high, period}};
}

double Weight::operator()(Point x) const {
  switch (family) {
    case WeightFamily::Constant:
      return params[0];
    case WeightFamily::Linear:
      return params[1] + params[0] * x.x;
    case WeightFamily::Checkerboard: {
      const double period = params[2];
      const auto ix = static_cast<long long>(std::floor(x.x / period));
      const auto iy = static_cast<long long>(std::floor(x.y / period));
      return ((ix + iy) % 2 + 2) % 2 == 0 ? params[0] : params[1];
    }
  }
  return 0.0;
}

double Weight::bound(const Rect& rect) const {
  switch (family) {
    case WeightFamily::Constant:
      return params[0];
    case WeightFamily::Linear:
      return std::max((*this)({rect.x0, rect.y0}), (*this)({rect.x1, rect.y0}));
    case WeightFamily::Checkerboard:
      return std::max(params[0], params[1]);
  }
  return 0.0;
}

void Weight::validate(const Rect& rect) const {
  const std::size_t expected = family == WeightFamily::Constant ? 1
                               : family == WeightFamily::Linear ? 2
                                                                : 3;
  if (params.size() != expected) {
    std::ostringstream msg;
    msg << "weight '" << family_name() << "' expects " << expected << " parameters";
    throw std::invalid_argument(msg.str());
  }
  for (double v : params) {
    if (!std::isfinite(v)) throw std::invalid_argument("weight parameters must be finite");
  }
  double lowest = 0.0;
  switch (family) {
    case WeightFamily::Constant:
      lowest = params[0];
      break;
    case WeightFamily::Linear:
      lowest = std::min((*this)({rect.x0, rect.y0}), (*this)({rect.x1, rect.y0}));
      break;
    case WeightFamily::Checkerboard:
      if (!(params[2] > 0.0)) throw std::invalid_argument("checkerboard period must be positive");
      lowest = std::min(params[0], params[1]);
      break;
  }
  if (lowest < 0.0) throw std::invalid_argument("weight mu must be nonnegative on the domain");
}

std::string Weight::family_name() const {
  switch (family) {
    case WeightFamily::Constant:
      return "constant";
    case WeightFamily::Linear:
      return "linear";
    case WeightFamily::Checkerboard:
      return "checkerboard";
  }
  return "unknown";
}

WeightFamily Weight::parse_family(const std::string& name) {
  if (name == "constant") return WeightFamily::Constant;
  if (name == "linear") return WeightFamily::Linear;
  if (name == "checkerboard") return WeightFamily::Checkerboard;
  throw std::invalid_argument("unknown weight family '" + name + "'");
}

std::string Exponents::violation() const {
  std::ostringstream msg;
  if (!(p > 1.0 && p < kDimension)) {
    msg << "need 1 < p < N (p=" << p << ", N=" << kDimension << ")";
  } else if (!(q > p && q < p_star())) {
    msg << "need p < q < p* (p=" << p << ", q=" << q << ", p*=" << p_star() << ")";
  }
  return msg.str();
}

std::vector<double> cell_weights(const Mesh& mesh, const Weight& mu, QuadratureRule rule) {
  const auto qp = quadrature_points(rule);
  std::vector<double> out(mesh.num_triangles());
  for (std::size_t t = 0; t < out.size(); ++t) {
    double s = 0.0;
    for (const auto& bary : qp) s += mu(mesh.map_point(t, bary));
    out[t] = s / 3.0;
  }
  return out;
}

OrliczSpace::OrliczSpace(MeshPtr mesh, Exponents exps, Weight mu, QuadratureRule rule)
    : mesh_(std::move(mesh)), exps_(exps), mu_(std::move(mu)) {
  mu_.validate(mesh_->rect());
  mu_cells_ = cell_weights(*mesh_, mu_, rule);
}

ModularParts OrliczSpace::parts(const CellField& g) const {
  if (g.size() != mesh_->num_triangles()) {
    throw std::invalid_argument("cell field length does not match triangle count");
  }
  const auto areas = mesh_->areas();
  ModularParts out;
  for (std::size_t t = 0; t < g.size(); ++t) {
    const double mag = std::sqrt(g[t].norm2());
    if (mag == 0.0) continue;
    out.p_part += areas[t] * std::pow(mag, exps_.p);
    out.q_part += areas[t] * mu_cells_[t] * std::pow(mag, exps_.q);
  }
  return out;
}

double OrliczSpace::modular(const CellField& g) const {
  const ModularParts m = parts(g);
  return m.p_part + m.q_part;
}

double OrliczSpace::p_norm(const CellField& g) const {
  return std::pow(parts(g).p_part, 1.0 / exps_.p);
}

double OrliczSpace::weighted_q_seminorm(const CellField& g) const {
  return std::pow(parts(g).q_part, 1.0 / exps_.q);
}

double OrliczSpace::luxemburg_norm(const CellField& g) const {
  const ModularParts m = parts(g);
  if (!std::isfinite(m.p_part) || !std::isfinite(m.q_part)) {
    throw NumericDomainError("luxemburg_norm: modular is not finite");
  }
  if (m.p_part == 0.0 && m.q_part == 0.0) return 0.0;

  const auto rho = [&](double tau) { return scaled_modular(m, exps_.p, exps_.q, tau); };

  double sup = 0.0;
  for (const auto& v : g) sup = std::max(sup, std::sqrt(v.norm2()));
  double lo = std::numeric_limits<double>::epsilon();
  double hi = std::max(1.0, sup * mesh_->total_area());
  // rho is strictly decreasing in tau; widen until rho(lo) > 1 >= rho(hi).
  for (int k = 0; k < 2000 && rho(hi) > 1.0; ++k) hi *= 2.0;
  for (int k = 0; k < 2000 && rho(lo) <= 1.0; ++k) lo *= 0.5;
  if (!(rho(hi) <= 1.0) || !(rho(lo) > 1.0)) {
    throw NumericDomainError("luxemburg_norm: bisection bracket not found");
  }
  for (int it = 0; it < 400 && hi - lo > 1e-12 * hi; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (rho(mid) > 1.0) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

ModularRelations OrliczSpace::check_modular_relations(const CellField& g) const {
  constexpr double kRelTol = 1e-10;
  ModularRelations r;
  const ModularParts m = parts(g);
  r.norm = luxemburg_norm(g);
  r.modular = m.p_part + m.q_part;
  if (r.norm == 0.0) {
    r.sign_consistent = r.modular == 0.0;
    r.holds = r.sign_consistent;
    return r;
  }
  r.unit_modular = scaled_modular(m, exps_.p, exps_.q, r.norm);

  const double norm_gap = r.norm - 1.0;
  const double mod_gap = r.modular - 1.0;
  const bool norm_at_one = std::abs(norm_gap) <= kRelTol;
  if (norm_at_one) {
    r.sign_consistent = std::abs(mod_gap) <= 1e3 * kRelTol;
    r.lower = r.upper = 1.0;
  } else {
    r.sign_consistent = (norm_gap < 0.0) == (mod_gap < 0.0);
    const double np = std::pow(r.norm, exps_.p);
    const double nq = std::pow(r.norm, exps_.q);
    r.lower = std::min(np, nq);
    r.upper = std::max(np, nq);
  }
  r.lower_slack = r.modular - r.lower;
  r.upper_slack = r.upper - r.modular;
  const double tol = kRelTol * std::max(1.0, r.modular);
  r.holds = r.sign_consistent && r.lower_slack >= -tol && r.upper_slack >= -tol &&
            std::abs(r.unit_modular - 1.0) <= kRelTol;
  return r;
}

}  // namespace kdp
