#pragma once

// Problem data for the Kirchhoff double phase Dirichlet problem and a
// sampling-based checker of the structural hypotheses on the data.

#include <memory>
#include <span>
#include <string>
#include <vector>

#include "kdp/mesh.hpp"
#include "kdp/orlicz.hpp"

namespace kdp {

/// psi(s) = a0 + b0 s^(theta - 1).
struct KirchhoffCoeffs {
  double a0 = 1.0;
  double b0 = 1.0;
  double theta = 1.5;
};

struct PowerTerm {
  double c = 1.0;
  double r = 4.0;
};

/// f(s) = sum_i c_i |s|^(r_i - 2) s, with primitive F(s) = sum_i c_i/r_i |s|^r_i.
struct Nonlinearity {
  std::vector<PowerTerm> terms{PowerTerm{}};

  double f(double s) const;
  double F(double s) const;
  /// Largest r_i, the growth exponent.
  double growth() const;
  double min_exponent() const;
};

struct ProblemSpec {
  Rect domain{};
  int nx = 32;
  int ny = 32;
  Exponents exps{};
  Weight mu = Weight::linear(1.0, 0.0);
  KirchhoffCoeffs kirchhoff{};
  Nonlinearity f{};
  QuadratureRule rule = QuadratureRule::EdgeMidpoint;
};

/// Pointwise nonlinearity. Throws NumericDomainError on overflow.
double eval_f(const ProblemSpec& spec, Point x, double s);
double eval_F(const ProblemSpec& spec, Point x, double s);

struct HypothesisVerdict {
  std::string id;
  std::string description;
  bool passed = false;
  std::string detail;
};

struct HypothesisReport {
  std::vector<HypothesisVerdict> verdicts;

  bool all_passed() const;
  const HypothesisVerdict* find(const std::string& id) const;
};

/// Symmetric grid: +-(log-spaced 1e-6 .. 1e3) plus a linear band on [-10, 10].
std::vector<double> default_sample_grid();

/// Verdicts are "consistent on grid" or "violated at s = ...", never proofs.
/// Throws std::invalid_argument for an empty grid.
HypothesisReport check_hypotheses(const ProblemSpec& spec, std::span<const double> s_grid);

void write_report(std::ostream& os, const HypothesisReport& report);

/// An assembled problem: validated spec, its mesh and the Orlicz space on it.
class Problem {
 public:
  /// Throws std::invalid_argument when the data violates the exponent or
  /// coefficient constraints, or the weight is invalid.
  explicit Problem(ProblemSpec spec);

  const ProblemSpec& spec() const { return spec_; }
  const MeshPtr& mesh_ptr() const { return mesh_; }
  const Mesh& mesh() const { return *mesh_; }
  const OrliczSpace& space() const { return space_; }
  const Exponents& exps() const { return spec_.exps; }
  const KirchhoffCoeffs& kirchhoff() const { return spec_.kirchhoff; }
  const Nonlinearity& f() const { return spec_.f; }
  QuadratureRule rule() const { return spec_.rule; }
  std::span<const double> mu_cells() const { return space_.mu_cells(); }

 private:
  ProblemSpec spec_;
  MeshPtr mesh_;
  OrliczSpace space_;
};

}  // namespace kdp
