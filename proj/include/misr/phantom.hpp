#pragma once

#include <span>
#include <vector>

#include "misr/operators.hpp"
#include "misr/rng.hpp"
#include "misr/volume.hpp"

namespace misr {

/// Randomized ellipsoid phantom over a [-1, 1] intensity range. Same spec and
/// seed give bitwise-identical volumes; the draw order (ellipsoid count, then
/// per-ellipsoid center/semi-axes/intensity, then bias coefficients) is part
/// of that contract.
struct PhantomSpec {
  Dims dims;
  Spacing spacing = {};
  std::uint64_t seed = 0;
  int min_ellipsoids = 3;
  int max_ellipsoids = 8;
  double min_intensity = -1.0;
  double max_intensity = 1.0;
  double min_semiaxis_frac = 0.05;
  double max_semiaxis_frac = 0.4;
  double background = -1.0;
  double bias_amplitude = 0.05;  // low-order polynomial shading; 0 disables, capped at 0.1
};

/// Sum of smoothstep-edged ellipsoid contributions over the background,
/// plus the optional bias field, clipped to [-1, 1].
Volume generate_phantom(const PhantomSpec& spec);

/// One measurement per (axis, k) pair with sigma = sigma_base / k; noise
/// streams are derived per index from the base generator.
std::vector<Measurement> degrade(const Volume& x, std::span<const Axis> axes,
                                 std::span<const int> scale_factors, double sigma_base,
                                 const SeededRng& base);

}  // namespace misr
