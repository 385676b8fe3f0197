#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace dropal {

/// Mixes a sequence of keys into a single 64-bit seed. Used to derive
/// independent streams from (base seed, point index, run index, ...) tuples,
/// so results never depend on the order in which streams are consumed.
std::uint64_t derive_seed(std::initializer_list<std::uint64_t> keys);

/// Seeded 64-bit Mersenne Twister with library-independent conversions.
/// The engine's output sequence is fixed by the standard; the standard
/// distributions are not, so uniform() and below() are done here.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() noexcept { return engine_(); }
  /// Uniform in [0, 1) with 53 random bits.
  double uniform() noexcept;
  double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }
  /// Uniform integer in [0, n), n > 0, without modulo bias.
  std::uint64_t below(std::uint64_t n) noexcept;
  bool bernoulli(double p) noexcept { return uniform() < p; }

 private:
  std::mt19937_64 engine_;
};

}  // namespace dropal
