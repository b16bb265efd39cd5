#include "misr/volume.hpp"

#include <cctype>
#include <cmath>

namespace misr {

const char* axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
  }
  return "?";
}

Axis axis_from_name(std::string_view s) {
  if (s.size() == 1) {
    switch (std::tolower(static_cast<unsigned char>(s[0]))) {
      case 'x': return Axis::X;
      case 'y': return Axis::Y;
      case 'z': return Axis::Z;
    }
  }
  throw std::invalid_argument("unknown axis name: '" + std::string(s) + "' (expected x, y, or z)");
}

Dims Dims::with(Axis a, int n) const {
  Dims d = *this;
  (a == Axis::X ? d.nx : (a == Axis::Y ? d.ny : d.nz)) = n;
  return d;
}

std::string Dims::str() const {
  return std::to_string(nx) + "x" + std::to_string(ny) + "x" + std::to_string(nz);
}

Spacing Spacing::with(Axis a, double s) const {
  Spacing sp = *this;
  (a == Axis::X ? sp.sx : (a == Axis::Y ? sp.sy : sp.sz)) = s;
  return sp;
}

Volume::Volume(Dims dims, Spacing spacing, double fill) : dims_(dims), spacing_(spacing) {
  if (!dims.valid()) {
    throw std::invalid_argument("Volume: dims must be positive, got " + dims.str());
  }
  if (!spacing.valid()) {
    throw std::invalid_argument("Volume: spacing must be strictly positive");
  }
  if (!std::isfinite(fill)) {
    throw std::invalid_argument("Volume: fill value must be finite");
  }
  data_.assign(dims.count(), fill);
}

Volume Volume::from_data(Dims dims, Spacing spacing, std::vector<double> data) {
  Volume v(dims, spacing);
  if (data.size() != dims.count()) {
    throw std::invalid_argument("Volume::from_data: data length " + std::to_string(data.size()) +
                                " does not match dims " + dims.str());
  }
  v.data_ = std::move(data);
  if (!v.all_finite()) {
    throw std::invalid_argument("Volume::from_data: data contains non-finite entries");
  }
  return v;
}

void Volume::fill(double v) { data_.assign(data_.size(), v); }

void Volume::add_scaled(double a, const Volume& x) {
  require_same_dims(x, *this, "Volume::add_scaled");
  const double* xd = x.data_.data();
  double* yd = data_.data();
  const std::size_t n = data_.size();
  for (std::size_t i = 0; i < n; ++i) yd[i] += a * xd[i];
}

void Volume::scale_in_place(double a) {
  for (double& v : data_) v *= a;
}

bool Volume::all_finite() const {
  for (double v : data_) {
    if (!std::isfinite(v)) return false;
  }
  return true;
}

void require_same_dims(const Volume& x, const Volume& y, const char* where) {
  if (!(x.dims() == y.dims())) {
    throw std::invalid_argument(std::string(where) + ": dimension mismatch " + x.dims().str() +
                                " vs " + y.dims().str());
  }
}

Volume axpy(double a, const Volume& x, const Volume& y) {
  require_same_dims(x, y, "axpy");
  Volume out = y;
  out.add_scaled(a, x);
  return out;
}

double dot(const Volume& x, const Volume& y) {
  require_same_dims(x, y, "dot");
  const double* xd = x.data().data();
  const double* yd = y.data().data();
  const std::size_t n = x.size();
  double acc = 0.0;
  for (std::size_t i = 0; i < n; ++i) acc += xd[i] * yd[i];
  return acc;
}

double norm2(const Volume& x) { return std::sqrt(dot(x, x)); }

Volume scaled(double a, const Volume& x) {
  Volume out = x;
  out.scale_in_place(a);
  return out;
}

Volume sub(const Volume& x, const Volume& y) {
  require_same_dims(x, y, "sub");
  Volume out = x;
  out.add_scaled(-1.0, y);
  return out;
}

}  // namespace misr
