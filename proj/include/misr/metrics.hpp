#pragma once

#include <span>

#include "misr/volume.hpp"

namespace misr {

/// 10 log10(data_range^2 / MSE); +inf for identical volumes. data_range
/// defaults to 2 for [-1, 1] intensities.
double psnr(const Volume& x, const Volume& ref, double data_range = 2.0);

/// Mean local SSIM under a 3D Gaussian window (sigma 1.5, radius 5),
/// C1 = 0.01^2 and C2 = 0.03^2 on intensities remapped from [-1, 1] to
/// [0, 1]. Only window positions fully inside the volume contribute, so every
/// dimension must be at least 11.
double ssim3d(const Volume& x, const Volume& ref);

struct MetricStats {
  double mean = 0.0;
  double stddev = 0.0;  // sample standard deviation
  std::size_t n = 0;
};

MetricStats aggregate(std::span<const double> values);

}  // namespace misr
