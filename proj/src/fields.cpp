#include "kdp/fields.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>
#include <vector>

namespace kdp {

namespace {

Point normalized(const Rect& r, Point x) {
  return {(x.x - r.x0) / (r.x1 - r.x0), (x.y - r.y0) / (r.y1 - r.y0)};
}

}  // namespace

MeshFunction bump(MeshPtr mesh) {
  const Rect r = mesh->rect();
  return MeshFunction::interpolate(std::move(mesh), [r](Point x) {
    const Point n = normalized(r, x);
    return std::sin(std::numbers::pi * n.x) * std::sin(std::numbers::pi * n.y);
  });
}

MeshFunction standing_wave(MeshPtr mesh, int k) {
  const Rect r = mesh->rect();
  return MeshFunction::interpolate(std::move(mesh), [r, k](Point x) {
    const Point n = normalized(r, x);
    return std::sin(std::numbers::pi * k * n.x) * std::sin(std::numbers::pi * n.y);
  });
}

namespace {

// Thin parts couple to the other sign through shared triangles strongly
// enough to destroy the fiber geometry, so both parts must be substantial.
bool balanced(const MeshFunction& u) {
  std::size_t pos = 0, neg = 0;
  for (std::size_t i = 0; i < u.size(); ++i) {
    pos += u[i] > 0.0;
    neg += u[i] < 0.0;
  }
  const double hi = u.max(), lo = -u.min();
  return pos >= (pos + neg) / 5 && neg >= (pos + neg) / 5 && hi > 0.0 && lo > 0.0 &&
         std::min(hi, lo) >= 0.3 * std::max(hi, lo);
}

}  // namespace

MeshFunction random_bumps(MeshPtr mesh, std::mt19937_64& rng, int bumps, SignMode mode) {
  if (bumps < 1 || (mode == SignMode::SignChanging && bumps < 2)) {
    throw std::invalid_argument("random_bumps: not enough bumps for the requested sign mode");
  }
  std::uniform_real_distribution<double> center(0.15, 0.85);
  std::uniform_real_distribution<double> width(0.08, 0.25);
  std::uniform_real_distribution<double> amp(0.5, 1.5);
  std::bernoulli_distribution coin(0.5);
  const Rect r = mesh->rect();

  for (int attempt = 0; attempt < 1000; ++attempt) {
    struct Bump {
      Point c;
      double w, a;
    };
    std::vector<Bump> bs;
    for (int k = 0; k < bumps; ++k) {
      Bump b{{center(rng), center(rng)}, width(rng), amp(rng)};
      switch (mode) {
        case SignMode::Positive:
          break;
        case SignMode::Negative:
          b.a = -b.a;
          break;
        case SignMode::SignChanging:
          if (k == 1 || (k > 1 && coin(rng))) b.a = -b.a;
          break;
        case SignMode::Any:
          if (coin(rng)) b.a = -b.a;
          break;
      }
      bs.push_back(b);
    }
    MeshFunction u = MeshFunction::interpolate(mesh, [&](Point x) {
      const Point n = normalized(r, x);
      double s = 0.0;
      for (const auto& b : bs) {
        const double dx = n.x - b.c.x, dy = n.y - b.c.y;
        s += b.a * std::exp(-(dx * dx + dy * dy) / (2.0 * b.w * b.w));
      }
      return s * std::sin(std::numbers::pi * n.x) * std::sin(std::numbers::pi * n.y);
    });
    if (mode != SignMode::SignChanging || balanced(u)) return u;
  }
  throw std::runtime_error("random_bumps: could not draw a sign-changing field");
}

MeshFunction random_bumps(MeshPtr mesh, std::uint64_t seed, int bumps, SignMode mode) {
  std::mt19937_64 rng(seed);
  return random_bumps(std::move(mesh), rng, bumps, mode);
}

}  // namespace kdp
