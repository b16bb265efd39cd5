#pragma once

#include <cstdint>

#include "misr/volume.hpp"

namespace misr {

/// Counter-based generator: output i is a splitmix64-style bijective mix of
/// seed + i, so draws depend only on (seed, stream, call index) and never on
/// hidden generator state. Substreams derived from (seed, stream) are
/// statistically independent, which lets the harness hand out per-subject and
/// per-measurement streams without sequencing constraints.
///
/// Gaussians come from Box-Muller on two uniform draws; the second variate of
/// each pair is cached, so the call sequence (not just the count of u64 draws)
/// is part of the reproducibility contract.
class SeededRng {
public:
  explicit SeededRng(std::uint64_t seed, std::uint64_t stream = 0);

  std::uint64_t next_u64();

  /// Uniform on [0, 1), 53-bit resolution.
  double next_unit();

  /// Standard normal via Box-Muller.
  double next_normal();

  /// Independent substream; does not advance this generator.
  SeededRng derive(std::uint64_t stream) const;

  std::uint64_t seed() const { return seed_; }

private:
  std::uint64_t seed_ = 0;     // effective, after stream mixing
  std::uint64_t counter_ = 0;
  bool has_cached_ = false;
  double cached_ = 0.0;
};

/// i.i.d. standard normal entries in flat order; deterministic given rng state.
Volume sample_standard_normal(SeededRng& rng, Dims dims, Spacing spacing = {});

}  // namespace misr
