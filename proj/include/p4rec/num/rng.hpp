#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

namespace p4rec::num {

inline uint64_t splitmix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// All randomness in the project flows through this wrapper. normal() is
// hand-rolled Box-Muller so results do not depend on the stdlib's
// distribution internals.
class Rng {
 public:
  explicit Rng(uint64_t seed) : gen_(splitmix64(seed)), seed_(seed) {}

  uint64_t next_u64() { return gen_(); }

  // [0, 1)
  double uniform() { return static_cast<double>(gen_() >> 11) * 0x1.0p-53; }

  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double theta = 6.283185307179586 * u2;
    spare_ = r * std::sin(theta);
    has_spare_ = true;
    return r * std::cos(theta);
  }

  double normal(double mu, double sigma) { return mu + sigma * normal(); }

  // [0, n)
  int64_t randint(int64_t n) {
    if (n <= 0) return 0;
    const uint64_t un = static_cast<uint64_t>(n);
    const uint64_t limit = UINT64_MAX - UINT64_MAX % un;
    uint64_t x = gen_();
    while (x >= limit) x = gen_();
    return static_cast<int64_t>(x % un);
  }

  template <class T>
  void shuffle(std::vector<T>& v) {
    for (size_t i = v.size(); i > 1; --i) {
      const size_t j = static_cast<size_t>(randint(static_cast<int64_t>(i)));
      std::swap(v[i - 1], v[j]);
    }
  }

  // Independent child stream; deterministic in (own seed, stream id).
  Rng derive(uint64_t stream) const {
    return Rng(splitmix64(seed_ ^ splitmix64(stream + 0x1234abcdULL)));
  }

 private:
  std::mt19937_64 gen_;
  uint64_t seed_ = 0;
  double spare_ = 0;
  bool has_spare_ = false;
};

}  // namespace p4rec::num
