#include "misr/rng.hpp"

#include <cmath>
#include <numbers>

namespace misr {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

}  // namespace

SeededRng::SeededRng(std::uint64_t seed, std::uint64_t stream) {
  seed_ = (stream == 0) ? seed : mix64(seed + kGolden * stream) ^ mix64(stream + kGolden);
}

std::uint64_t SeededRng::next_u64() {
  ++counter_;
  return mix64(seed_ + kGolden * counter_);
}

double SeededRng::next_unit() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double SeededRng::next_normal() {
  if (has_cached_) {
    has_cached_ = false;
    return cached_;
  }
  // u1 in (0, 1] so log(u1) is finite.
  const double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
  const double u2 = next_unit();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double theta = 2.0 * std::numbers::pi * u2;
  cached_ = r * std::sin(theta);
  has_cached_ = true;
  return r * std::cos(theta);
}

SeededRng SeededRng::derive(std::uint64_t stream) const {
  SeededRng out(0);
  out.seed_ = mix64(seed_ + kGolden * stream) ^ mix64(stream + 0x6A09E667F3BCC909ULL);
  return out;
}

Volume sample_standard_normal(SeededRng& rng, Dims dims, Spacing spacing) {
  Volume v(dims, spacing);
  for (double& x : v.data()) x = rng.next_normal();
  return v;
}

}  // namespace misr
