#ifndef CYLQG_RNG_HPP
#define CYLQG_RNG_HPP

#include <cstdint>
#include <random>

namespace cylqg {

// Deterministic stream of doubles in [0,1). We take the top 53 bits of the
// mt19937_64 output instead of going through std::uniform_real_distribution,
// whose results are not pinned down by the standard and differ across
// standard libraries. Reproducibility of seeded runs is a contract here.
class Rng {
public:
  explicit Rng(std::uint64_t seed) : gen_(seed) {}

  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  // Uniform in [a,b).
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  std::uint64_t raw() { return gen_(); }

private:
  std::mt19937_64 gen_;
};

} // namespace cylqg

#endif
