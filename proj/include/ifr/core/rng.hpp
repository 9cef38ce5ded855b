#pragma once

#include <cstdint>

namespace ifr {

// splitmix64 finalizer; bijective on 64-bit words.
inline uint64_t mix64(uint64_t z) {
  z += 0x9E3779B97F4A7C15ULL;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

// Deterministic per-index stream derivation. Used so that every sample of a
// dataset owns an independent seed that does not depend on generation order.
inline uint64_t derive_seed(uint64_t master, uint64_t index) {
  return mix64(master ^ mix64(index ^ 0xD1B54A32D192ED03ULL));
}

// Small deterministic generator. The standard library distributions are
// implementation-defined, so all sampling goes through this type to keep the
// bit-exact reproducibility contracts portable.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n).
  int uniform_int(int n) {
    int v = static_cast<int>(uniform() * n);
    return v >= n ? n - 1 : v;
  }

 private:
  uint64_t state_;
};

}  // namespace ifr
