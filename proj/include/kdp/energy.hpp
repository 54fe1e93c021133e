#pragma once

// The Kirchhoff double phase energy
//   phi(u) = Psi(Phi_H(grad u)) - int F(x, u),
// its truncations phi_+ / phi_-, and the discrete weak-form gradient.

#include <ostream>
#include <utility>
#include <vector>

#include "kdp/mesh.hpp"
#include "kdp/problem.hpp"

namespace kdp {

/// Which part of u the potential term sees: F(u), F(u+) or F(-u-).
enum class Truncation { None, Positive, Negative };

enum class Sign { Plus, Minus };

inline Truncation truncation_for(Sign s) {
  return s == Sign::Plus ? Truncation::Positive : Truncation::Negative;
}

/// Regularization of |g|^(p-2) g used in gradient assembly only.
inline constexpr double kFluxRegularization = 1e-10;

struct EnergyReport {
  double phi = 0.0;
  double a0_term = 0.0;
  double b0_term = 0.0;
  double potential_term = 0.0;
  double phi_H = 0.0;
};

void write_energy_header(std::ostream& os);
void write_energy_row(std::ostream& os, const EnergyReport& e);

/// Discrete dual vector of v -> <phi'(u), v>, indexed by interior vertex.
struct Residual {
  std::vector<double> values;
  /// Euclidean norm divided by sqrt(interior count).
  double norm = 0.0;
};

/// psi(s) = a0 + b0 s^(theta-1), with psi(0) = a0 + b0 when theta = 1.
/// Throws std::invalid_argument for s < 0.
double psi(double s, const KirchhoffCoeffs& k);
/// Psi(s) = a0 s + b0/theta s^theta.
double Psi(double s, const KirchhoffCoeffs& k);

double phi_H(const CellField& grad, const Problem& problem);
double phi_H(const MeshFunction& u, const Problem& problem);

/// Quadrature of F(x, u), F(x, u+) or F(x, -u-); truncation is applied at
/// the quadrature points.
double potential(const MeshFunction& u, const Problem& problem,
                 Truncation trunc = Truncation::None);

EnergyReport phi(const MeshFunction& u, const Problem& problem);
double phi_truncated(const MeshFunction& u, const Problem& problem, Sign sign);
double energy(const MeshFunction& u, const Problem& problem, Truncation trunc);

/// Throws NumericDomainError naming the vertex on non-finite entries.
Residual residual(const MeshFunction& u, const Problem& problem,
                  Truncation trunc = Truncation::None);

/// <phi'(u), v> for an arbitrary admissible direction v.
double pairing(const MeshFunction& u, const MeshFunction& v, const Problem& problem,
               Truncation trunc = Truncation::None);

/// (<phi'(u), u+>, <phi'(u), -u->), both with the Kirchhoff factor of the whole u.
std::pair<double, double> pairings(const MeshFunction& u, const Problem& problem);

/// <A(u), v> = int (|grad u|^(p-2) + mu |grad u|^(q-2)) grad u . grad v, no Kirchhoff factor.
double operator_pairing(const MeshFunction& u, const MeshFunction& v, const Problem& problem);

/// Scalar flux coefficient |g|^(p-2) + mu |g|^(q-2), regularized.
double flux_coefficient(double grad_sq, double p, double q, double mu);

/// Dot product of a residual with the interior values of v.
double dot_interior(const Residual& r, const MeshFunction& v);

}  // namespace kdp
