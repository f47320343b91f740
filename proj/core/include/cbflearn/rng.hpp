#pragma once

#include <cstdint>
#include <iosfwd>
#include <random>

namespace cbflearn {

// Deterministic random source. Distribution mappings are written out by hand
// so that a given seed yields the same stream regardless of standard-library
// distribution internals.
class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0) : gen_(seed) {}

  std::uint64_t next_u64() { return gen_(); }

  // Uniform on [0, 1).
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Standard normal via Box-Muller, one spare cached.
  double normal();
  double normal(double mean, double stddev) { return mean + stddev * normal(); }

  // Uniform index in [0, n).
  std::size_t index(std::size_t n);

  friend std::ostream& operator<<(std::ostream& os, const Rng& rng);
  friend std::istream& operator>>(std::istream& is, Rng& rng);

 private:
  std::mt19937_64 gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace cbflearn
