#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace tlmix {

// splitmix64 step; used to derive independent substreams from one trial seed
// so that e.g. source sampling never shifts the target data stream.
inline uint64_t mix64(uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

inline uint64_t substream(uint64_t seed, uint64_t tag) {
  return mix64(seed ^ mix64(tag));
}

// Stream tags for per-trial substreams.
enum : uint64_t {
  kStreamSourceData = 1,
  kStreamTargetData = 2,
  kStreamAlgo = 3,
  kStreamPredict = 4,
  kStreamHoldout = 5,
  kStreamBase = 6,
};

// mt19937_64 with hand-rolled uniform/normal transforms so draws are
// identical across standard-library implementations.
class Rng {
 public:
  explicit Rng(uint64_t seed) : eng_(seed) {}

  double uniform() {  // [0, 1)
    return double(eng_() >> 11) * 0x1.0p-53;
  }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  bool bernoulli(double p) { return uniform() < p; }

  double normal() {  // Box-Muller, second value cached
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = 0.0;
    while (u1 <= 0.0) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    has_spare_ = true;
    return r * std::cos(a);
  }

  // Index drawn proportionally to nonnegative weights. Consumes exactly one
  // uniform regardless of the number of categories or zero entries.
  int categorical(std::span<const double> w) {
    double tot = 0.0;
    for (double x : w) tot += x;
    double u = uniform() * tot;
    double acc = 0.0;
    for (size_t i = 0; i < w.size(); ++i) {
      acc += w[i];
      if (u < acc) return int(i);
    }
    return int(w.size()) - 1;
  }

  uint64_t next_u64() { return eng_(); }

 private:
  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace tlmix
