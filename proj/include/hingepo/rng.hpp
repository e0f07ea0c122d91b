#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace hingepo {

// Counter-based generator: the SplitMix64 finalizer applied to
// key + (counter+1) * golden-gamma. Draws depend only on (key, counter),
// so streams are bit-reproducible on any platform and split() yields
// statistically independent child streams without sharing state.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed) {}

  // Derive an independent stream. Children with distinct tags never
  // collide with each other or the parent.
  Rng split(std::uint64_t tag) const {
    return Rng(mix(key_ ^ mix(tag + 0x632be59bd9b4e019ULL)));
  }

  std::uint64_t next_u64() {
    ++ctr_;
    return mix(key_ + ctr_ * 0x9e3779b97f4a7c15ULL);
  }

  // Uniform in [0, 1), 53-bit resolution.
  double next_double() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // Uniform integer in [0, n), n >= 1. Widening-multiply range map;
  // the O(n / 2^64) bias is irrelevant at our scales.
  std::uint64_t next_below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

  // Standard normal via Box-Muller. One value per call; no cached spare,
  // so the draw count stays predictable.
  double next_normal() {
    double u1 = next_double();
    double u2 = next_double();
    double r = std::sqrt(-2.0 * std::log1p(-u1));
    return r * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Dirichlet(1, ..., 1): normalized i.i.d. exponentials. All entries
  // strictly positive.
  std::vector<double> dirichlet_flat(int n) {
    std::vector<double> x(static_cast<std::size_t>(n));
    double sum = 0.0;
    for (auto& v : x) {
      v = -std::log1p(-next_double());
      if (v <= 0.0) v = 1e-300;  // u == 0 draw
      sum += v;
    }
    for (auto& v : x) v /= sum;
    return x;
  }

  // Categorical draw from a probability vector (sums to ~1).
  int next_categorical(const double* p, int n) {
    double u = next_double();
    double acc = 0.0;
    for (int i = 0; i < n - 1; ++i) {
      acc += p[i];
      if (u < acc) return i;
    }
    return n - 1;
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t key_;
  std::uint64_t ctr_ = 0;
};

}  // namespace hingepo
