#include "lims/rng.hpp"

#include <cmath>

namespace lims {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

RandomStream RandomStream::derive(std::uint64_t master_seed, std::uint64_t stream,
                                  std::uint64_t counter) {
  std::uint64_t h = splitmix64(master_seed);
  h = splitmix64(h ^ stream);
  h = splitmix64(h ^ (counter * 0xD1B54A32D192ED03ULL));
  return RandomStream(h);
}

std::complex<double> RandomStream::complex_normal() {
  static const double scale = 1.0 / std::sqrt(2.0);
  const double re = normal_(engine_);
  const double im = normal_(engine_);
  return {scale * re, scale * im};
}

double RandomStream::uniform(double lo, double hi) {
  std::uniform_real_distribution<double> dist(lo, hi);
  return dist(engine_);
}

}  // namespace lims
