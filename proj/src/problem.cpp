#include "kdp/problem.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include "kdp/errors.hpp"

namespace kdp {

double Nonlinearity::f(double s) const {
  if (s == 0.0) return 0.0;
  const double mag = std::abs(s);
  double sum = 0.0;
  for (const auto& t : terms) sum += t.c * std::pow(mag, t.r - 1.0);
  return s > 0.0 ? sum : -sum;
}

double Nonlinearity::F(double s) const {
  if (s == 0.0) return 0.0;
  const double mag = std::abs(s);
  double sum = 0.0;
  for (const auto& t : terms) sum += t.c / t.r * std::pow(mag, t.r);
  return sum;
}

double Nonlinearity::growth() const {
  double r = 0.0;
  for (const auto& t : terms) r = std::max(r, t.r);
  return r;
}

double Nonlinearity::min_exponent() const {
  double r = terms.empty() ? 0.0 : terms.front().r;
  for (const auto& t : terms) r = std::min(r, t.r);
  return r;
}

double eval_f(const ProblemSpec& spec, Point, double s) {
  if (!std::isfinite(s)) throw NumericDomainError("eval_f: argument is not finite");
  const double v = spec.f.f(s);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "eval_f: overflow at s=" << s;
    throw NumericDomainError(msg.str());
  }
  return v;
}

double eval_F(const ProblemSpec& spec, Point, double s) {
  if (!std::isfinite(s)) throw NumericDomainError("eval_F: argument is not finite");
  const double v = spec.f.F(s);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "eval_F: overflow at s=" << s;
    throw NumericDomainError(msg.str());
  }
  return v;
}

bool HypothesisReport::all_passed() const {
  return std::all_of(verdicts.begin(), verdicts.end(), [](const auto& v) { return v.passed; });
}

const HypothesisVerdict* HypothesisReport::find(const std::string& id) const {
  for (const auto& v : verdicts) {
    if (v.id == id) return &v;
  }
  return nullptr;
}

std::vector<double> default_sample_grid() {
  std::vector<double> grid;
  constexpr int kLog = 181;
  for (int k = 0; k < kLog; ++k) {
    const double e = -6.0 + 9.0 * k / (kLog - 1);
    const double s = std::pow(10.0, e);
    grid.push_back(s);
    grid.push_back(-s);
  }
  for (int k = 1; k <= 40; ++k) {
    grid.push_back(0.25 * k);
    grid.push_back(-0.25 * k);
  }
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());
  return grid;
}

namespace {

std::string fmt_s(double s) {
  std::ostringstream os;
  os.precision(6);
  os << s;
  return os.str();
}

// Least-squares slope of log|y| against log|x|.
double loglog_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double lx = std::log(std::abs(xs[i]));
    const double ly = std::log(std::abs(ys[i]));
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// Positive and negative samples, each ordered by increasing |s|.
struct SplitGrid {
  std::vector<double> pos;
  std::vector<double> neg;
};

SplitGrid split_grid(std::span<const double> grid) {
  SplitGrid g;
  for (double s : grid) {
    if (s > 0.0) g.pos.push_back(s);
    if (s < 0.0) g.neg.push_back(s);
  }
  std::sort(g.pos.begin(), g.pos.end());
  std::sort(g.neg.begin(), g.neg.end(), [](double a, double b) { return a > b; });
  return g;
}

// Checks that ratio(s) -> +inf along increasing |s| in the tail |s| >= 1.
std::string check_divergence(const std::vector<double>& side, const Nonlinearity& f,
                             double expo) {
  std::vector<double> xs, rs;
  for (double s : side) {
    if (std::abs(s) < 1.0) continue;
    const double ratio = f.f(s) / (std::pow(std::abs(s), expo - 2.0) * s);
    if (!rs.empty() && !(ratio > rs.back())) {
      return "ratio not increasing at s=" + fmt_s(s);
    }
    xs.push_back(s);
    rs.push_back(ratio);
  }
  if (xs.size() < 3) return "grid tail too short";
  if (!(rs.front() > 0.0)) return "ratio not positive at s=" + fmt_s(xs.front());
  const double slope = loglog_slope(xs, rs);
  if (!(slope > 1e-9)) return "no divergence along tail, fitted exponent " + fmt_s(slope);
  return {};
}

// Checks that ratio(s) -> 0 as s -> 0 along |s| <= 1e-2.
std::string check_decay(const std::vector<double>& side, const Nonlinearity& f, double expo) {
  std::vector<double> xs, rs;
  for (double s : side) {
    if (std::abs(s) > 1e-2) break;
    const double ratio = f.f(s) / (std::pow(std::abs(s), expo - 2.0) * s);
    if (!rs.empty() && !(ratio >= rs.back())) {
      return "ratio not decaying towards 0 at s=" + fmt_s(s);
    }
    xs.push_back(s);
    rs.push_back(ratio);
  }
  if (xs.size() < 3) return "grid too coarse near 0";
  if (!(rs.front() > 0.0)) return {};
  const double slope = loglog_slope(xs, rs);
  if (!(slope > 1e-9)) return "ratio does not vanish at 0, fitted exponent " + fmt_s(slope);
  return {};
}

}  // namespace

HypothesisReport check_hypotheses(const ProblemSpec& spec, std::span<const double> s_grid) {
  if (s_grid.empty()) throw std::invalid_argument("check_hypotheses: empty sample grid");

  HypothesisReport report;
  const auto add = [&](std::string id, std::string desc, std::string failure) {
    const bool ok = failure.empty();
    report.verdicts.push_back(
        {std::move(id), std::move(desc), ok, ok ? "consistent on grid" : std::move(failure)});
  };

  const Exponents& e = spec.exps;
  const KirchhoffCoeffs& k = spec.kirchhoff;
  const Nonlinearity& f = spec.f;
  const double qt = e.q * k.theta;
  const double pstar = e.p_star();

  // (H1)
  {
    std::string failure = e.violation();
    if (failure.empty()) {
      try {
        spec.mu.validate(spec.domain);
        const double bound = spec.mu.bound(spec.domain);
        const Rect& d = spec.domain;
        for (int i = 0; i <= 20 && failure.empty(); ++i) {
          for (int j = 0; j <= 20; ++j) {
            const Point x{d.x0 + (d.x1 - d.x0) * i / 20.0, d.y0 + (d.y1 - d.y0) * j / 20.0};
            const double m = spec.mu(x);
            if (m < 0.0 || m > bound) {
              failure = "mu outside [0, bound] at x=(" + fmt_s(x.x) + "," + fmt_s(x.y) + ")";
              break;
            }
          }
        }
      } catch (const std::invalid_argument& ex) {
        failure = ex.what();
      }
    }
    add("H1", "1<p<N, p<q<p*, 0<=mu in Linf", failure);
  }

  // (H2)
  {
    std::string failure;
    if (!(k.a0 >= 0.0)) failure = "a0 must be >= 0";
    else if (!(k.b0 > 0.0)) failure = "b0 must be > 0";
    else if (!(k.theta >= 1.0)) failure = "theta must be >= 1";
    else if (!(qt < pstar)) failure = "q*theta=" + fmt_s(qt) + " not below p*=" + fmt_s(pstar);
    add("H2", "psi(s)=a0+b0 s^(theta-1), a0>=0, b0>0, theta>=1, q*theta<p*", failure);
  }

  const SplitGrid sides = split_grid(s_grid);

  // Exponent window shared by (H3)(i)-(ii), one entry per power term.
  {
    std::string failure;
    if (f.terms.empty()) failure = "no power terms";
    for (const auto& t : f.terms) {
      if (!(t.c > 0.0)) {
        failure = "coefficient c=" + fmt_s(t.c) + " must be positive";
        break;
      }
      if (!(qt < t.r && t.r < pstar)) {
        failure = "exponent r=" + fmt_s(t.r) + " outside (q*theta, p*)=(" + fmt_s(qt) + "," +
                  fmt_s(pstar) + ")";
        break;
      }
    }
    add("R", "q*theta < r_i < p* for every power term", failure);
  }

  // (H3)(i): subcritical growth.
  {
    std::string failure;
    const double r = f.growth();
    if (!(r < pstar)) {
      failure = "growth exponent r=" + fmt_s(r) + " not below p*=" + fmt_s(pstar);
    } else {
      for (const auto* side : {&sides.pos, &sides.neg}) {
        std::vector<double> xs, ys;
        for (double s : *side) {
          if (std::abs(s) >= 10.0) {
            xs.push_back(s);
            ys.push_back(f.f(s));
          }
        }
        if (xs.size() < 3) {
          failure = "grid tail |s|>=10 too short";
          break;
        }
        const double slope = loglog_slope(xs, ys);
        if (!(slope <= r - 1.0 + 1e-6)) {
          failure = "fitted growth exponent " + fmt_s(slope) + " exceeds r-1=" + fmt_s(r - 1.0);
          break;
        }
      }
    }
    add("H3i", "|f(x,s)| <= c(1+|s|^(r-1)), r<p*", failure);
  }

  // (H3)(ii): f(s)/(|s|^(q theta-2)s) -> +inf.
  {
    std::string failure = check_divergence(sides.pos, f, qt);
    if (failure.empty()) failure = check_divergence(sides.neg, f, qt);
    add("H3ii", "f(x,s)/(|s|^(q*theta-2)s) -> +inf as s -> +-inf", failure);
  }

  // (H3)(iii): decay near 0, exponent depends on the degenerate branch.
  {
    const double expo = k.a0 > 0.0 ? e.p : e.p * k.theta;
    std::string failure = check_decay(sides.pos, f, expo);
    if (failure.empty()) failure = check_decay(sides.neg, f, expo);
    add("H3iii",
        k.a0 > 0.0 ? "f(x,s)/(|s|^(p-2)s) -> 0 as s -> 0"
                   : "f(x,s)/(|s|^(p*theta-2)s) -> 0 as s -> 0 (a0 = 0)",
        failure);
  }

  // (H3)(iv): s f(s) - q theta F(s) nondecreasing on [0,inf), nonincreasing on (-inf,0].
  {
    std::string failure;
    const auto h = [&](double s) { return f.f(s) * s - qt * f.F(s); };
    for (const auto* side : {&sides.pos, &sides.neg}) {
      double prev = h(0.0);
      for (double s : *side) {
        const double cur = h(s);
        if (cur < prev - 1e-12 * std::max(1.0, std::abs(prev))) {
          failure = "monotonicity violated at s=" + fmt_s(s);
          break;
        }
        prev = cur;
      }
      if (!failure.empty()) break;
    }
    add("H3iv", "s -> f(x,s)s - q*theta F(x,s) monotone on each half line", failure);
  }

  // (H3)(v): f(s)/|s|^(q theta - 1) strictly increasing on each half line.
  {
    std::string failure;
    const auto g = [&](double s) { return f.f(s) / std::pow(std::abs(s), qt - 1.0); };
    std::vector<double> pos(sides.pos), neg(sides.neg);
    std::sort(neg.begin(), neg.end());
    for (const auto* side : {&neg, &pos}) {
      for (std::size_t i = 1; i < side->size(); ++i) {
        if (!(g((*side)[i]) > g((*side)[i - 1]))) {
          failure = "not strictly increasing at s=" + fmt_s((*side)[i]);
          break;
        }
      }
      if (!failure.empty()) break;
    }
    add("H3v", "s -> f(x,s)/|s|^(q*theta-1) strictly increasing on each half line", failure);
  }

  return report;
}

void write_report(std::ostream& os, const HypothesisReport& report) {
  os << "# hypothesis_report\n";
  os << "# all_passed: " << (report.all_passed() ? "true" : "false") << '\n';
  os << "id,verdict,description,detail\n";
  for (const auto& v : report.verdicts) {
    os << v.id << ',' << (v.passed ? "PASS" : "FAIL") << ",\"" << v.description << "\",\""
       << v.detail << "\"\n";
  }
}

namespace {

ProblemSpec validated(ProblemSpec spec) {
  if (auto v = spec.exps.violation(); !v.empty()) throw std::invalid_argument(v);
  const auto& k = spec.kirchhoff;
  if (!(k.a0 >= 0.0) || !(k.b0 > 0.0) || !(k.theta >= 1.0)) {
    throw std::invalid_argument("Kirchhoff coefficients need a0 >= 0, b0 > 0, theta >= 1");
  }
  if (!(spec.exps.q * k.theta < spec.exps.p_star())) {
    throw std::invalid_argument("Kirchhoff exponent needs q*theta < p*");
  }
  if (spec.f.terms.empty()) throw std::invalid_argument("nonlinearity has no terms");
  for (const auto& t : spec.f.terms) {
    if (!(t.c > 0.0) || !(t.r > 1.0)) {
      throw std::invalid_argument("power terms need c > 0 and r > 1");
    }
  }
  spec.mu.validate(spec.domain);
  return spec;
}

}  // namespace

Problem::Problem(ProblemSpec spec)
    : spec_(validated(std::move(spec))),
      mesh_(Mesh::build(spec_.domain, spec_.nx, spec_.ny)),
      space_(mesh_, spec_.exps, spec_.mu, spec_.rule) {}

}  // namespace kdp
