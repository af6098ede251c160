#pragma once

#include <cstdint>
#include <vector>

namespace cmodlab {

/// splitmix64: tiny, seed-deterministic, platform-independent.
class SplitMix64 {
 public:
  explicit SplitMix64(uint64_t seed) : s_(seed) {}

  uint64_t next() {
    uint64_t z = (s_ += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  /// Uniform in [0, n), rejection-sampled to avoid modulo bias.
  uint64_t below(uint64_t n) {
    uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    uint64_t v;
    do {
      v = next();
    } while (v >= limit);
    return v % n;
  }

  /// Uniform in [lo, hi], inclusive.
  long range(long lo, long hi) {
    return lo + static_cast<long>(below(static_cast<uint64_t>(hi - lo + 1)));
  }

  bool coin() { return (next() & 1ULL) != 0; }

  template <typename T>
  const T& pick(const std::vector<T>& v) {
    return v[static_cast<size_t>(below(v.size()))];
  }

 private:
  uint64_t s_;
};

}  // namespace cmodlab
