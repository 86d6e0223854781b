#pragma once

// Deterministic random source. std::normal_distribution is not pinned by the
// standard, so sampling is implemented here (Box-Muller) to keep runs
// bit-reproducible across toolchains.

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace umbra {

inline std::uint64_t fnv1a64(const void* data, std::size_t n, std::uint64_t h = 0xcbf29ce484222325ull) {
  const auto* p = static_cast<const unsigned char*>(data);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= p[i];
    h *= 0x100000001b3ull;
  }
  return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), g_(seed) {}

  std::uint64_t seed() const { return seed_; }
  std::uint64_t u64() { return g_(); }

  // [0, 1)
  double uniform() { return (u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // inclusive bounds
  int uniform_int(int lo, int hi) {
    return lo + static_cast<int>(u64() % static_cast<std::uint64_t>(hi - lo + 1));
  }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    double u2 = uniform();
    while (u1 <= 1e-300) u1 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * M_PI * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  double normal(double mean, double std) { return mean + std * normal(); }

  // Independent stream derived from the base seed and a tag; does not consume
  // state from this generator.
  Rng derive(const std::string& tag) const {
    std::uint64_t h = fnv1a64(tag);
    h ^= seed_ + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
    return Rng(h);
  }

 private:
  std::uint64_t seed_;
  std::mt19937_64 g_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace umbra
