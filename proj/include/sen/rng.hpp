#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace sen {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

inline uint64_t fnv1a64(const char* s) {
  uint64_t h = 1469598103934665603ULL;
  for (const char* p = s; *p; ++p) h = (h ^ (uint64_t)(unsigned char)*p) * 1099511628211ULL;
  return h;
}

// Seeded generator with pinned value derivation so runs reproduce bitwise
// across standard-library versions (std distributions are not portable).
class Rng {
 public:
  explicit Rng(uint64_t seed) : base_(seed), gen_(splitmix64(seed)) {}

  // Independent stream derived from this seed, e.g. child("noise", 3).
  Rng child(const char* tag, uint64_t n = 0) const {
    return Rng(splitmix64(base_ ^ splitmix64(fnv1a64(tag) ^ n)));
  }

  uint64_t bits() { return gen_(); }

  // Uniform in [0, 1) with 53-bit resolution.
  double uniform() { return (double)(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n), n > 0, via rejection (unbiased).
  uint64_t integer(uint64_t n) {
    const uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = gen_();
    } while (v >= limit);
    return v % n;
  }

  // Standard normal via Box-Muller (no cached spare).
  double normal() {
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
  }

  template <typename T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      std::swap(v[i - 1], v[integer(i)]);
    }
  }

 private:
  uint64_t base_;
  std::mt19937_64 gen_;
};

}  // namespace sen
