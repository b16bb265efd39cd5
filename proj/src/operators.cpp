#include "misr/operators.hpp"

#include <cmath>

namespace misr {

int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return (i < n) ? i : period - i;
}

namespace {

std::vector<double> slice_profile_taps(int k, int* radius_out) {
  if (k == 1) {
    *radius_out = 0;
    return {1.0};
  }
  const double fwhm_to_sigma = 2.0 * std::sqrt(2.0 * std::log(2.0));
  const double sigma = static_cast<double>(k) / fwhm_to_sigma;
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> taps(2 * radius + 1);
  double sum = 0.0;
  for (int m = -radius; m <= radius; ++m) {
    const double t = std::exp(-0.5 * (m / sigma) * (m / sigma));
    taps[m + radius] = t;
    sum += t;
  }
  for (double& t : taps) t /= sum;
  *radius_out = radius;
  return taps;
}

struct AxisView {
  int n_axis;      // extent along the operator axis
  std::size_t inner;  // contiguous run length below the axis
  std::size_t outer;  // number of runs above the axis
};

AxisView make_view(const Dims& d, Axis a) {
  const auto nx = static_cast<std::size_t>(d.nx);
  const auto ny = static_cast<std::size_t>(d.ny);
  const auto nz = static_cast<std::size_t>(d.nz);
  switch (a) {
    case Axis::X: return {d.nx, 1, ny * nz};
    case Axis::Y: return {d.ny, nx, nz};
    case Axis::Z: return {d.nz, nx * ny, 1};
  }
  return {};
}

}  // namespace

SliceProfileOperator::SliceProfileOperator(Axis axis, int scale_factor, Dims hr_dims,
                                           Spacing hr_spacing)
    : axis_(axis), k_(scale_factor), hr_dims_(hr_dims), hr_spacing_(hr_spacing) {
  if (!hr_dims.valid()) {
    throw std::invalid_argument("SliceProfileOperator: invalid HR dims " + hr_dims.str());
  }
  if (!hr_spacing.valid()) {
    throw std::invalid_argument("SliceProfileOperator: spacing must be positive");
  }
  if (k_ < 1) {
    throw std::invalid_argument("SliceProfileOperator: scale factor must be >= 1, got " +
                                std::to_string(k_));
  }
  const int n_lr = hr_dims.along(axis) / k_;
  if (n_lr < 1) {
    throw std::invalid_argument("SliceProfileOperator: scale factor " + std::to_string(k_) +
                                " leaves no LR sample along " + axis_name(axis) + " of " +
                                hr_dims.str());
  }
  lr_dims_ = hr_dims.with(axis, n_lr);
  lr_spacing_ = hr_spacing.with(axis, hr_spacing.along(axis) * k_);
  taps_ = slice_profile_taps(k_, &radius_);
}

Volume SliceProfileOperator::forward(const Volume& x) const {
  if (!(x.dims() == hr_dims_)) {
    throw std::invalid_argument("SliceProfileOperator::forward: expected dims " + hr_dims_.str() +
                                ", got " + x.dims().str());
  }
  Volume out(lr_dims_, lr_spacing_, 0.0);
  const AxisView hr = make_view(hr_dims_, axis_);
  const AxisView lr = make_view(lr_dims_, axis_);
  const int off = offset();
  const double* xd = x.data().data();
  double* od = out.data().data();

  for (std::size_t o = 0; o < hr.outer; ++o) {
    const double* xo = xd + o * hr.inner * static_cast<std::size_t>(hr.n_axis);
    double* oo = od + o * lr.inner * static_cast<std::size_t>(lr.n_axis);
    for (int j = 0; j < lr.n_axis; ++j) {
      const int center = j * k_ + off;
      double* orow = oo + static_cast<std::size_t>(j) * lr.inner;
      for (int m = -radius_; m <= radius_; ++m) {
        const double w = taps_[m + radius_];
        const int c = reflect_index(center + m, hr.n_axis);
        const double* xrow = xo + static_cast<std::size_t>(c) * hr.inner;
        for (std::size_t i = 0; i < hr.inner; ++i) orow[i] += w * xrow[i];
      }
    }
  }
  return out;
}

Volume SliceProfileOperator::adjoint(const Volume& y) const {
  if (!(y.dims() == lr_dims_)) {
    throw std::invalid_argument("SliceProfileOperator::adjoint: expected dims " + lr_dims_.str() +
                                ", got " + y.dims().str());
  }
  Volume out(hr_dims_, hr_spacing_, 0.0);
  const AxisView hr = make_view(hr_dims_, axis_);
  const AxisView lr = make_view(lr_dims_, axis_);
  const int off = offset();
  const double* yd = y.data().data();
  double* od = out.data().data();

  for (std::size_t o = 0; o < hr.outer; ++o) {
    const double* yo = yd + o * lr.inner * static_cast<std::size_t>(lr.n_axis);
    double* oo = od + o * hr.inner * static_cast<std::size_t>(hr.n_axis);
    for (int j = 0; j < lr.n_axis; ++j) {
      const int center = j * k_ + off;
      const double* yrow = yo + static_cast<std::size_t>(j) * lr.inner;
      for (int m = -radius_; m <= radius_; ++m) {
        const double w = taps_[m + radius_];
        const int c = reflect_index(center + m, hr.n_axis);
        double* orow = oo + static_cast<std::size_t>(c) * hr.inner;
        for (std::size_t i = 0; i < hr.inner; ++i) orow[i] += w * yrow[i];
      }
    }
  }
  return out;
}

Measurement::Measurement(Volume y_in, SliceProfileOperator op_in, double sigma_in)
    : y(std::move(y_in)), op(std::move(op_in)), sigma(sigma_in) {
  if (!(y.dims() == op.lr_dims())) {
    throw std::invalid_argument("Measurement: y dims " + y.dims().str() +
                                " do not match operator LR dims " + op.lr_dims().str());
  }
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw std::invalid_argument("Measurement: sigma must be finite and nonnegative");
  }
}

Measurement simulate_measurement(const Volume& x, Axis axis, int scale_factor, double sigma_base,
                                 SeededRng& rng) {
  if (scale_factor < 2) {
    throw std::invalid_argument("simulate_measurement: scale factor must be >= 2");
  }
  if (!(sigma_base >= 0.0) || !std::isfinite(sigma_base)) {
    throw std::invalid_argument("simulate_measurement: sigma_base must be finite and nonnegative");
  }
  SliceProfileOperator op(axis, scale_factor, x.dims(), x.spacing());
  Volume y = op.forward(x);
  const double sigma = sigma_base / scale_factor;
  if (sigma > 0.0) {
    for (double& v : y.data()) v += sigma * rng.next_normal();
  }
  return Measurement(std::move(y), std::move(op), sigma);
}

StackedOperator::StackedOperator(std::vector<SliceProfileOperator> ops) : ops_(std::move(ops)) {
  if (ops_.empty()) {
    throw std::invalid_argument("StackedOperator: need at least one component operator");
  }
  for (const auto& op : ops_) {
    if (!(op.hr_dims() == ops_.front().hr_dims())) {
      throw std::invalid_argument("StackedOperator: component HR dims differ: " +
                                  ops_.front().hr_dims().str() + " vs " + op.hr_dims().str());
    }
  }
}

std::vector<Volume> StackedOperator::forward(const Volume& x) const {
  std::vector<Volume> out;
  out.reserve(ops_.size());
  for (const auto& op : ops_) out.push_back(op.forward(x));
  return out;
}

Volume StackedOperator::adjoint(const std::vector<Volume>& ys) const {
  if (ys.size() != ops_.size()) {
    throw std::invalid_argument("StackedOperator::adjoint: got " + std::to_string(ys.size()) +
                                " blocks for " + std::to_string(ops_.size()) + " operators");
  }
  Volume acc(hr_dims(), ops_.front().hr_spacing(), 0.0);
  for (std::size_t i = 0; i < ops_.size(); ++i) {
    acc.add_scaled(1.0, ops_[i].adjoint(ys[i]));
  }
  return acc;
}

}  // namespace misr
