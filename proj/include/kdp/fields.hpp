#pragma once

// Smooth test and start functions on a mesh.

#include <cstdint>
#include <random>

#include "kdp/mesh.hpp"

namespace kdp {

enum class SignMode { Any, Positive, Negative, SignChanging };

/// sin(pi x^) sin(pi y^) in coordinates normalized to the rectangle.
MeshFunction bump(MeshPtr mesh);

/// sin(pi k x^) sin(pi y^): k half-waves across x, sign-changing for k >= 2.
MeshFunction standing_wave(MeshPtr mesh, int k);

/// Sum of `bumps` Gaussian bumps times the sine envelope. In SignChanging
/// mode the first bump is positive and the second negative, and the draw is
/// repeated until each part covers at least a fifth of the sign-carrying
/// vertices with a peak no smaller than 0.3 of the other.
MeshFunction random_bumps(MeshPtr mesh, std::mt19937_64& rng, int bumps, SignMode mode);

/// Convenience overload seeding its own generator.
MeshFunction random_bumps(MeshPtr mesh, std::uint64_t seed, int bumps, SignMode mode);

}  // namespace kdp
