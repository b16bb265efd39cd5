#pragma once

#include <vector>

#include "misr/rng.hpp"
#include "misr/volume.hpp"

namespace misr {

/// Through-plane degradation of a 2D multi-slice acquisition: Gaussian
/// slice-profile correlation along one axis followed by stride-k decimation.
/// The profile FWHM equals the slice separation, i.e. the scale factor k, so
/// sigma_g = k / (2*sqrt(2*ln 2)). Taps are truncated at ceil(3*sigma_g) and
/// renormalized to sum to 1; boundaries are mirrored without repeating the
/// edge sample. Decimation keeps samples at HR index j*k + floor(k/2), so each
/// kept slice sits centered within its HR span. k = 1 degenerates to the
/// identity kernel [1].
class SliceProfileOperator {
public:
  SliceProfileOperator(Axis axis, int scale_factor, Dims hr_dims, Spacing hr_spacing = {});

  Axis axis() const { return axis_; }
  int scale_factor() const { return k_; }
  const Dims& hr_dims() const { return hr_dims_; }
  const Dims& lr_dims() const { return lr_dims_; }
  const Spacing& hr_spacing() const { return hr_spacing_; }
  const Spacing& lr_spacing() const { return lr_spacing_; }
  const std::vector<double>& kernel() const { return taps_; }
  int kernel_radius() const { return radius_; }
  /// HR index of the sample kept for LR slice j is j*k + offset().
  int offset() const { return k_ / 2; }

  Volume forward(const Volume& x) const;
  Volume adjoint(const Volume& y) const;

private:
  Axis axis_;
  int k_;
  Dims hr_dims_, lr_dims_;
  Spacing hr_spacing_, lr_spacing_;
  std::vector<double> taps_;
  int radius_;
};

/// Mirror-without-edge-repeat index fold into [0, n-1].
int reflect_index(int i, int n);

/// One observed LR volume with its forward model and noise level.
struct Measurement {
  Volume y;
  SliceProfileOperator op;
  double sigma = 0.0;

  Measurement(Volume y_in, SliceProfileOperator op_in, double sigma_in);
};

/// y = A x + sigma * eps with sigma = sigma_base / k, eps ~ N(0, I).
Measurement simulate_measurement(const Volume& x, Axis axis, int scale_factor, double sigma_base,
                                 SeededRng& rng);

/// Explicit joint operator over a shared HR grid. Kept as a verification
/// surface: the solvers never build it.
class StackedOperator {
public:
  explicit StackedOperator(std::vector<SliceProfileOperator> ops);

  std::size_t count() const { return ops_.size(); }
  const SliceProfileOperator& op(std::size_t i) const { return ops_[i]; }
  const Dims& hr_dims() const { return ops_.front().hr_dims(); }

  std::vector<Volume> forward(const Volume& x) const;
  Volume adjoint(const std::vector<Volume>& ys) const;

private:
  std::vector<SliceProfileOperator> ops_;
};

}  // namespace misr
