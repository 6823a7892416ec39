#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

#include "makbasin/mak.hpp"

namespace makbasin {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

/// Seed for work item `index` under master seed `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t index) {
  return splitmix64(splitmix64(seed) ^ splitmix64(index + 0x5851F42D4C957F2DULL));
}

/// Small portable generator (xoshiro256**). The standard distributions are
/// implementation-defined, so uniform and exponential draws are done here to
/// keep outputs identical across toolchains.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (auto& word : state_) {
      s = splitmix64(s);
      word = s;
    }
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
    const std::uint64_t t = state_[1] << 17;
    state_[2] ^= state_[0];
    state_[3] ^= state_[1];
    state_[1] ^= state_[2];
    state_[0] ^= state_[3];
    state_[2] ^= t;
    state_[3] = rotl(state_[3], 45);
    return result;
  }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  double exponential() { return -std::log1p(-uniform()); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t state_[4]{};
};

/// One uniform point of {x1, x2 >= 0, x1 + x2 <= 1} from three exponential
/// spacings (flat Dirichlet).
inline State uniform_simplex_point(Rng& rng) {
  const double e1 = rng.exponential();
  const double e2 = rng.exponential();
  const double e3 = rng.exponential();
  const double total = e1 + e2 + e3;
  State x(2);
  x(0) = e1 / total;
  x(1) = std::min(e2 / total, 1.0 - x(0));
  return x;
}

/// `count` uniform samples of the reduced simplex; sample i depends only on
/// (seed, i).
inline std::vector<State> sample_simplex(int count, std::uint64_t seed) {
  std::vector<State> out;
  out.reserve(count > 0 ? count : 0);
  for (int i = 0; i < count; ++i) {
    Rng rng(derive_seed(seed, static_cast<std::uint64_t>(i)));
    out.push_back(uniform_simplex_point(rng));
  }
  return out;
}

inline bool in_reduced_simplex(const State& x, double tol = 0.0) {
  return x.size() == 2 && x(0) >= -tol && x(1) >= -tol && x(0) + x(1) <= 1.0 + tol;
}

}  // namespace makbasin
