#include "misr/metrics.hpp"

#include <cmath>
#include <limits>
#include <vector>

namespace misr {

double psnr(const Volume& x, const Volume& ref, double data_range) {
  require_same_dims(x, ref, "psnr");
  if (!(data_range > 0.0)) throw std::invalid_argument("psnr: data_range must be positive");
  double mse = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double d = x[i] - ref[i];
    mse += d * d;
  }
  mse /= static_cast<double>(x.size());
  if (mse == 0.0) return std::numeric_limits<double>::infinity();
  return 10.0 * std::log10(data_range * data_range / mse);
}

namespace {

constexpr int kSsimRadius = 5;
constexpr double kSsimSigma = 1.5;
constexpr double kC1 = 0.01 * 0.01;
constexpr double kC2 = 0.03 * 0.03;

std::vector<double> ssim_window_taps() {
  std::vector<double> taps(2 * kSsimRadius + 1);
  double sum = 0.0;
  for (int m = -kSsimRadius; m <= kSsimRadius; ++m) {
    taps[m + kSsimRadius] = std::exp(-0.5 * (m / kSsimSigma) * (m / kSsimSigma));
    sum += taps[m + kSsimRadius];
  }
  for (double& t : taps) t /= sum;
  return taps;
}

/// Valid-mode separable filtering along one dimension of a flat (nx, ny, nz)
/// array; `which` picks the dimension, output shrinks by 2*radius there.
std::vector<double> filter_valid(const std::vector<double>& in, int nx, int ny, int nz, int which,
                                 const std::vector<double>& taps, int& onx, int& ony, int& onz) {
  const int r = static_cast<int>(taps.size() / 2);
  onx = which == 0 ? nx - 2 * r : nx;
  ony = which == 1 ? ny - 2 * r : ny;
  onz = which == 2 ? nz - 2 * r : nz;
  std::vector<double> out(static_cast<std::size_t>(onx) * ony * onz, 0.0);
  for (int z = 0; z < onz; ++z) {
    for (int y = 0; y < ony; ++y) {
      for (int x = 0; x < onx; ++x) {
        double acc = 0.0;
        for (int m = 0; m < static_cast<int>(taps.size()); ++m) {
          const int sx = which == 0 ? x + m : x;
          const int sy = which == 1 ? y + m : y;
          const int sz = which == 2 ? z + m : z;
          acc += taps[m] * in[(static_cast<std::size_t>(sz) * ny + sy) * nx + sx];
        }
        out[(static_cast<std::size_t>(z) * ony + y) * onx + x] = acc;
      }
    }
  }
  return out;
}

std::vector<double> gaussian_filter_valid(const std::vector<double>& in, int nx, int ny, int nz,
                                          const std::vector<double>& taps) {
  int ax, ay, az, bx, by, bz, cx, cy, cz;
  auto a = filter_valid(in, nx, ny, nz, 0, taps, ax, ay, az);
  auto b = filter_valid(a, ax, ay, az, 1, taps, bx, by, bz);
  return filter_valid(b, bx, by, bz, 2, taps, cx, cy, cz);
}

}  // namespace

double ssim3d(const Volume& x, const Volume& ref) {
  require_same_dims(x, ref, "ssim3d");
  const int win = 2 * kSsimRadius + 1;
  if (x.dims().nx < win || x.dims().ny < win || x.dims().nz < win) {
    throw std::invalid_argument("ssim3d: every dimension must be >= " + std::to_string(win) +
                                ", got " + x.dims().str());
  }
  const int nx = x.dims().nx, ny = x.dims().ny, nz = x.dims().nz;
  const std::size_t n = x.size();

  // Intensities enter on the [-1, 1] convention; remap to [0, 1] so the
  // standard constants (L = 1) apply.
  std::vector<double> a(n), b(n), aa(n), bb(n), ab(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double xi = 0.5 * (x[i] + 1.0);
    const double yi = 0.5 * (ref[i] + 1.0);
    a[i] = xi;
    b[i] = yi;
    aa[i] = xi * xi;
    bb[i] = yi * yi;
    ab[i] = xi * yi;
  }

  const auto taps = ssim_window_taps();
  const auto ma = gaussian_filter_valid(a, nx, ny, nz, taps);
  const auto mb = gaussian_filter_valid(b, nx, ny, nz, taps);
  const auto maa = gaussian_filter_valid(aa, nx, ny, nz, taps);
  const auto mbb = gaussian_filter_valid(bb, nx, ny, nz, taps);
  const auto mab = gaussian_filter_valid(ab, nx, ny, nz, taps);

  double total = 0.0;
  for (std::size_t i = 0; i < ma.size(); ++i) {
    const double mu_a = ma[i];
    const double mu_b = mb[i];
    const double va = maa[i] - mu_a * mu_a;
    const double vb = mbb[i] - mu_b * mu_b;
    const double cov = mab[i] - mu_a * mu_b;
    total += ((2.0 * mu_a * mu_b + kC1) * (2.0 * cov + kC2)) /
             ((mu_a * mu_a + mu_b * mu_b + kC1) * (va + vb + kC2));
  }
  return total / static_cast<double>(ma.size());
}

MetricStats aggregate(std::span<const double> values) {
  MetricStats st;
  st.n = values.size();
  if (st.n == 0) return st;
  double sum = 0.0;
  for (double v : values) sum += v;
  st.mean = sum / static_cast<double>(st.n);
  if (st.n > 1) {
    double ss = 0.0;
    for (double v : values) {
      const double d = v - st.mean;
      ss += d * d;
    }
    st.stddev = std::sqrt(ss / static_cast<double>(st.n - 1));
  }
  return st;
}

}  // namespace misr
