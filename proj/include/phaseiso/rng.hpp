#pragma once

#include <phaseiso/space.hpp>

#include <algorithm>
#include <cstdint>
#include <random>
#include <vector>

namespace phaseiso {

/// Name recorded in reports; bump the suffix whenever the stream layout changes.
inline constexpr const char* kGeneratorName = "mt19937_64/splitmix64-v1";

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Seed of the i-th independent substream of `seed`.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
  return splitmix64(splitmix64(seed) ^ splitmix64(stream + 0x632be59bd9b4e019ULL));
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

  double uniform(double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(engine_); }
  double gaussian() { return normal_(engine_); }
  int integer(int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(engine_); }
  bool coin() { return integer(0, 1) == 1; }
  double sign() { return coin() ? 1.0 : -1.0; }

  Vec gaussian_vector(int n) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = gaussian();
    return v;
  }

  Vec uniform_vector(int n, double lo = -1.0, double hi = 1.0) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = uniform(lo, hi);
    return v;
  }

  /// Each coordinate is zero with probability `zero_probability`, otherwise
  /// +-[0.1, 2].
  Vec sparse_vector(int n, double zero_probability) {
    Vec v = Vec::Zero(n);
    for (int i = 0; i < n; ++i)
      if (uniform(0.0, 1.0) >= zero_probability) v[i] = sign() * uniform(0.1, 2.0);
    return v;
  }

  /// Small integer coordinates in [-k, k]; makes ties and faces likely.
  Vec lattice_vector(int n, int k) {
    Vec v(n);
    for (int i = 0; i < n; ++i) v[i] = integer(-k, k);
    return v;
  }

  std::vector<int> permutation(int n) {
    std::vector<int> perm(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) perm[static_cast<std::size_t>(i)] = i;
    std::shuffle(perm.begin(), perm.end(), engine_);
    return perm;
  }

  std::mt19937_64& engine() { return engine_; }

 private:
  std::mt19937_64 engine_;
  std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace phaseiso
