#pragma once

#include <cstdint>
#include <random>
#include <span>
#include <string_view>
#include <utility>

#include "srcsel/hash.hpp"

namespace srcsel {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Derives an independent seed for a named sub-stream ("shuffle", "init",
// "sampler", ...) so every stage draws from its own reproducible sequence.
inline std::uint64_t substream(std::uint64_t seed, std::string_view name,
                               std::uint64_t a = 0, std::uint64_t b = 0) {
  Fnv1a h;
  h.str(name);
  std::uint64_t s = splitmix64(seed ^ h.digest());
  s = splitmix64(s ^ a);
  return splitmix64(s ^ (b * 0x632be59bd9b4e019ULL));
}

// mt19937_64 with distribution code written out by hand: the std
// distributions are implementation-defined, and output must be bit-stable.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next() { return engine_(); }

  // Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n); n > 0. Rejection keeps it unbiased.
  std::uint64_t below(std::uint64_t n) {
    const std::uint64_t limit = ~std::uint64_t{0} - (~std::uint64_t{0} % n);
    std::uint64_t x = next();
    while (x >= limit) x = next();
    return x % n;
  }

 private:
  std::mt19937_64 engine_;
};

template <typename T>
void shuffle(std::span<T> items, Rng& rng) {
  for (std::size_t i = items.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(items[i - 1], items[j]);
  }
}

}  // namespace srcsel
