#pragma once

#include <cstdint>
#include <random>

namespace geomark {

/// Seedable, splittable random source.
///
/// Wraps std::mt19937_64, whose output sequence is fixed by the standard, and
/// derives every variate from raw engine output so that datasets are
/// bit-identical across standard libraries. `split(stream)` yields an
/// independent child generator keyed by (seed, stream).
class Rng {
 public:
  explicit Rng(std::uint64_t seed);

  std::uint64_t seed() const noexcept { return seed_; }
  Rng split(std::uint64_t stream) const;

  std::uint64_t next() { return engine_(); }
  /// Uniform on [0, 1) with 53 random bits.
  double uniform();
  /// Uniform integer on [0, bound).
  std::uint64_t below(std::uint64_t bound);
  std::uint64_t poisson(double mean);

 private:
  std::uint64_t seed_;
  std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);

}  // namespace geomark
