#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

// Deterministic randomness. The engine is std::mt19937_64, whose output
// sequence is pinned by the C++ standard, and every derived draw below is
// built from raw engine output with fixed arithmetic. std::shuffle and the
// std distributions are deliberately avoided: their algorithms are
// implementation-defined and would break cross-build reproducibility of
// splits, masking and initialization.
namespace ogb::rng {

using Engine = std::mt19937_64;

inline Engine make_engine(std::uint64_t seed) { return Engine(seed); }

// Uniform integer in [0, n) via rejection sampling (unbiased).
inline std::uint64_t bounded(Engine& eng, std::uint64_t n) {
  const std::uint64_t limit = n == 0 ? 0 : (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
  std::uint64_t x;
  do {
    x = eng();
  } while (x >= limit);
  return x % n;
}

// Uniform double in [0, 1) with 53 bits of precision.
inline double unit_double(Engine& eng) {
  return static_cast<double>(eng() >> 11) * 0x1.0p-53;
}

// Standard normal via Box-Muller (two engine draws per pair).
class NormalSource {
 public:
  explicit NormalSource(Engine& eng) : eng_(eng) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = unit_double(eng_);
    while (u1 <= 0.0) u1 = unit_double(eng_);
    const double u2 = unit_double(eng_);
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 2.0 * M_PI * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

 private:
  Engine& eng_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

// Fisher-Yates with the pinned bounded draw above.
template <typename T>
void shuffle(std::vector<T>& v, Engine& eng) {
  for (std::size_t i = v.size(); i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(bounded(eng, i));
    std::swap(v[i - 1], v[j]);
  }
}

}  // namespace ogb::rng
