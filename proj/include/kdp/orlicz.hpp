#pragma once

// Double phase modular, Luxemburg norm and the Lp / weighted Lq building
// blocks, all evaluated on piecewise-constant cell fields.

#include <cmath>
#include <string>
#include <vector>

#include "kdp/mesh.hpp"

namespace kdp {

enum class WeightFamily { Constant, Linear, Checkerboard };

/// The double phase weight mu(x) >= 0.
///   constant:     params = {c}
///   linear:       params = {slope, offset}, mu = offset + slope * x
///   checkerboard: params = {low, high, period}
struct Weight {
  WeightFamily family = WeightFamily::Linear;
  std::vector<double> params{1.0, 0.0};

  static Weight constant(double c);
  static Weight linear(double slope, double offset = 0.0);
  static Weight checkerboard(double low, double high, double period);

  double operator()(Point x) const;
  /// Supremum of mu over the rectangle.
  double bound(const Rect& rect) const;
  /// Throws std::invalid_argument on malformed parameters or negative values.
  void validate(const Rect& rect) const;

  std::string family_name() const;
  static WeightFamily parse_family(const std::string& name);
};

struct Exponents {
  static constexpr double kDimension = 2.0;

  double p = 1.5;
  double q = 2.0;

  double p_star() const { return kDimension * p / (kDimension - p); }
  /// Empty when 1 < p < N and p < q < p*, otherwise a description.
  std::string violation() const;
};

/// Per-triangle average of mu over the quadrature points of `rule`.
std::vector<double> cell_weights(const Mesh& mesh, const Weight& mu, QuadratureRule rule);

struct ModularParts {
  double p_part = 0.0;  // int |g|^p
  double q_part = 0.0;  // int mu |g|^q
};

/// Outcome of checking the norm-modular relations on one field.
struct ModularRelations {
  double norm = 0.0;
  double modular = 0.0;
  /// Modular of g / norm; equals 1 for g != 0.
  double unit_modular = 0.0;
  bool sign_consistent = false;
  /// Bracket the modular must sit in, given which side of 1 the norm is on.
  double lower = 0.0;
  double upper = 0.0;
  double lower_slack = 0.0;
  double upper_slack = 0.0;
  bool holds = false;
};

/// The Musielak-Orlicz space W^{1,H}_0 seen through the gradients of P1
/// fields: everything here acts on cell fields g = grad u.
class OrliczSpace {
 public:
  OrliczSpace(MeshPtr mesh, Exponents exps, Weight mu,
              QuadratureRule rule = QuadratureRule::EdgeMidpoint);

  const Mesh& mesh() const { return *mesh_; }
  const Exponents& exponents() const { return exps_; }
  const Weight& weight() const { return mu_; }
  std::span<const double> mu_cells() const { return mu_cells_; }

  ModularParts parts(const CellField& g) const;
  double modular(const CellField& g) const;
  double p_norm(const CellField& g) const;
  double weighted_q_seminorm(const CellField& g) const;

  /// inf{tau > 0 : modular(g / tau) <= 1}, by bisection to 1e-12 relative.
  double luxemburg_norm(const CellField& g) const;

  ModularRelations check_modular_relations(const CellField& g) const;

 private:
  MeshPtr mesh_;
  Exponents exps_;
  Weight mu_;
  std::vector<double> mu_cells_;
};

/// Modular of g / tau from the precomputed parts.
inline double scaled_modular(const ModularParts& parts, double p, double q, double tau) {
  return parts.p_part * std::pow(tau, -p) + parts.q_part * std::pow(tau, -q);
}

}  // namespace kdp
