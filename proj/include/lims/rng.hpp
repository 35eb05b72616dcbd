#pragma once

#include <complex>
#include <cstdint>
#include <random>

namespace lims {

std::uint64_t splitmix64(std::uint64_t x);

/// Seeded random stream. Streams for independent work units are derived from a
/// master seed by hashing (seed, stream, counter), so the values a unit sees
/// do not depend on which thread runs it or in what order.
class RandomStream {
 public:
  explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

  static RandomStream derive(std::uint64_t master_seed, std::uint64_t stream,
                             std::uint64_t counter = 0);

  double normal() { return normal_(engine_); }

  /// Circularly symmetric complex Gaussian with E|z|^2 = 1.
  std::complex<double> complex_normal();

  /// Uniform on [lo, hi).
  double uniform(double lo, double hi);

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace lims
