#include "misr/phantom.hpp"

#include <algorithm>
#include <cmath>

namespace misr {

namespace {

double uniform_in(SeededRng& rng, double lo, double hi) {
  return lo + (hi - lo) * rng.next_unit();
}

struct Ellipsoid {
  double cx, cy, cz;
  double ax, ay, az;  // semi-axes in voxels
  double intensity;
};

double smoothstep01(double t) { return t * t * (3.0 - 2.0 * t); }

}  // namespace

Volume generate_phantom(const PhantomSpec& spec) {
  if (!spec.dims.valid()) throw std::invalid_argument("generate_phantom: invalid dims");
  if (spec.min_ellipsoids < 0 || spec.max_ellipsoids < spec.min_ellipsoids) {
    throw std::invalid_argument("generate_phantom: bad ellipsoid count range");
  }
  if (!(spec.min_semiaxis_frac > 0.0) || spec.max_semiaxis_frac < spec.min_semiaxis_frac) {
    throw std::invalid_argument("generate_phantom: bad semi-axis range");
  }
  if (!(spec.bias_amplitude >= 0.0) || spec.bias_amplitude > 0.1) {
    throw std::invalid_argument("generate_phantom: bias amplitude must lie in [0, 0.1]");
  }

  SeededRng rng(spec.seed);
  int count = spec.min_ellipsoids;
  if (spec.max_ellipsoids > spec.min_ellipsoids) {
    count += static_cast<int>(rng.next_u64() %
                              static_cast<std::uint64_t>(spec.max_ellipsoids - spec.min_ellipsoids + 1));
  }

  std::vector<Ellipsoid> shapes;
  shapes.reserve(static_cast<std::size_t>(count));
  for (int e = 0; e < count; ++e) {
    Ellipsoid el;
    el.cx = uniform_in(rng, 0.2, 0.8) * (spec.dims.nx - 1);
    el.cy = uniform_in(rng, 0.2, 0.8) * (spec.dims.ny - 1);
    el.cz = uniform_in(rng, 0.2, 0.8) * (spec.dims.nz - 1);
    el.ax = uniform_in(rng, spec.min_semiaxis_frac, spec.max_semiaxis_frac) * spec.dims.nx;
    el.ay = uniform_in(rng, spec.min_semiaxis_frac, spec.max_semiaxis_frac) * spec.dims.ny;
    el.az = uniform_in(rng, spec.min_semiaxis_frac, spec.max_semiaxis_frac) * spec.dims.nz;
    el.intensity = uniform_in(rng, spec.min_intensity, spec.max_intensity);
    shapes.push_back(el);
  }

  // Quadratic bias coefficients over normalized coords in [-1, 1]; scaled by
  // the sum of magnitudes so |bias| <= amplitude.
  double bias[10] = {};
  bool with_bias = spec.bias_amplitude > 0.0;
  if (with_bias) {
    double mag = 0.0;
    for (double& c : bias) {
      c = uniform_in(rng, -1.0, 1.0);
      mag += std::abs(c);
    }
    if (mag > 0.0) {
      for (double& c : bias) c *= spec.bias_amplitude / mag;
    } else {
      with_bias = false;
    }
  }

  Volume out(spec.dims, spec.spacing, spec.background);
  for (int z = 0; z < spec.dims.nz; ++z) {
    for (int y = 0; y < spec.dims.ny; ++y) {
      for (int x = 0; x < spec.dims.nx; ++x) {
        double v = spec.background;
        for (const Ellipsoid& el : shapes) {
          const double dx = (x - el.cx) / el.ax;
          const double dy = (y - el.cy) / el.ay;
          const double dz = (z - el.cz) / el.az;
          const double rho = std::sqrt(dx * dx + dy * dy + dz * dz);
          // ~1 voxel anti-aliased edge, measured along the steepest semi-axis.
          const double edge = std::min(el.ax, std::min(el.ay, el.az));
          const double tt = std::clamp((1.0 - rho) * edge + 0.5, 0.0, 1.0);
          if (tt > 0.0) v += (el.intensity - spec.background) * smoothstep01(tt);
        }
        if (with_bias) {
          const double xi = spec.dims.nx > 1 ? 2.0 * x / (spec.dims.nx - 1) - 1.0 : 0.0;
          const double et = spec.dims.ny > 1 ? 2.0 * y / (spec.dims.ny - 1) - 1.0 : 0.0;
          const double ze = spec.dims.nz > 1 ? 2.0 * z / (spec.dims.nz - 1) - 1.0 : 0.0;
          v += bias[0] + bias[1] * xi + bias[2] * et + bias[3] * ze + bias[4] * xi * xi +
               bias[5] * et * et + bias[6] * ze * ze + bias[7] * xi * et + bias[8] * xi * ze +
               bias[9] * et * ze;
        }
        out.at(x, y, z) = std::clamp(v, -1.0, 1.0);
      }
    }
  }
  return out;
}

std::vector<Measurement> degrade(const Volume& x, std::span<const Axis> axes,
                                 std::span<const int> scale_factors, double sigma_base,
                                 const SeededRng& base) {
  if (axes.size() != scale_factors.size()) {
    throw std::invalid_argument("degrade: axes and scale factors must pair up");
  }
  std::vector<Measurement> out;
  out.reserve(axes.size());
  for (std::size_t i = 0; i < axes.size(); ++i) {
    SeededRng stream = base.derive(i + 1);
    out.push_back(simulate_measurement(x, axes[i], scale_factors[i], sigma_base, stream));
  }
  return out;
}

}  // namespace misr
