#pragma once

#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace misr {

enum class Axis : int { X = 0, Y = 1, Z = 2 };

const char* axis_name(Axis a);
Axis axis_from_name(std::string_view s);

struct Dims {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t count() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  int along(Axis a) const { return a == Axis::X ? nx : (a == Axis::Y ? ny : nz); }
  Dims with(Axis a, int n) const;
  bool valid() const { return nx > 0 && ny > 0 && nz > 0; }
  bool operator==(const Dims&) const = default;
  std::string str() const;
};

struct Spacing {
  double sx = 1.0;
  double sy = 1.0;
  double sz = 1.0;

  double along(Axis a) const { return a == Axis::X ? sx : (a == Axis::Y ? sy : sz); }
  Spacing with(Axis a, double s) const;
  bool valid() const { return sx > 0.0 && sy > 0.0 && sz > 0.0; }
  bool operator==(const Spacing&) const = default;
};

/// Dense 3D scalar field over a regular grid, x-fastest flat layout:
/// data[(z*ny + y)*nx + x]. Treat as an immutable value across module
/// boundaries; the in-place mutators exist for owner-local hot loops.
class Volume {
public:
  Volume() = default;
  explicit Volume(Dims dims, Spacing spacing = {}, double fill = 0.0);

  /// Takes ownership of `data`; rejects length mismatch and non-finite entries.
  static Volume from_data(Dims dims, Spacing spacing, std::vector<double> data);

  const Dims& dims() const { return dims_; }
  const Spacing& spacing() const { return spacing_; }
  std::size_t size() const { return data_.size(); }

  double operator[](std::size_t i) const { return data_[i]; }
  double& operator[](std::size_t i) { return data_[i]; }
  double at(int x, int y, int z) const { return data_[flat_index(x, y, z)]; }
  double& at(int x, int y, int z) { return data_[flat_index(x, y, z)]; }

  std::size_t flat_index(int x, int y, int z) const {
    return (static_cast<std::size_t>(z) * dims_.ny + y) * dims_.nx + x;
  }

  const std::vector<double>& data() const { return data_; }
  std::vector<double>& data() { return data_; }

  void fill(double v);
  /// this += a*x
  void add_scaled(double a, const Volume& x);
  void scale_in_place(double a);

  bool all_finite() const;

private:
  Dims dims_{};
  Spacing spacing_{};
  std::vector<double> data_;
};

/// a*x + y elementwise; inputs unmodified. Result carries y's spacing.
Volume axpy(double a, const Volume& x, const Volume& y);

/// Sequential left-to-right sum of x[i]*y[i]; fixed order for reproducibility.
double dot(const Volume& x, const Volume& y);

double norm2(const Volume& x);

Volume scaled(double a, const Volume& x);
Volume sub(const Volume& x, const Volume& y);

void require_same_dims(const Volume& x, const Volume& y, const char* where);

}  // namespace misr
