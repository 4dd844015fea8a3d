#pragma once

#include <cmath>
#include <cstdint>
#include <vector>

namespace uavfml {

/*
 * Counter-based deterministic RNG. Every consumer derives its own stream from
 * (seed, stream ids), so traces are byte-identical for a given seed no matter
 * how work is scheduled. Distributions are hand-rolled on purpose: the
 * standard library's normal_distribution is implementation-defined.
 */

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(splitmix64(seed ^ 0x5bf03635ULL)) {}

  Rng(std::uint64_t seed, std::uint64_t stream_a, std::uint64_t stream_b = 0,
      std::uint64_t stream_c = 0)
      : state_(splitmix64(splitmix64(splitmix64(splitmix64(seed) ^ stream_a) ^ stream_b) ^
                          stream_c)) {}

  std::uint64_t next_u64() {
    state_ = splitmix64(state_);
    return state_;
  }

  /* Uniform in [0, 1). */
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  /* Uniform integer in [0, n). */
  std::uint64_t next_below(std::uint64_t n) { return n ? next_u64() % n : 0; }

  double normal() {
    /* Box-Muller; rejects the measure-zero u1 == 0 case. */
    double u1 = next_double();
    while (u1 <= 0.0) u1 = next_double();
    const double u2 = next_double();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925287 * u2);
  }

  /* Marsaglia-Tsang gamma(shape, 1), valid for shape > 0. */
  double gamma(double shape) {
    if (shape < 1.0) {
      const double u = next_double();
      return gamma(shape + 1.0) * std::pow(u > 0.0 ? u : 1e-300, 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = normal();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      const double u = next_double();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (u > 0.0 && std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  std::vector<double> dirichlet(double alpha, std::size_t n) {
    std::vector<double> p(n);
    double sum = 0.0;
    for (auto& v : p) {
      v = gamma(alpha);
      sum += v;
    }
    if (sum <= 0.0) {
      for (auto& v : p) v = 1.0 / static_cast<double>(n);
      return p;
    }
    for (auto& v : p) v /= sum;
    return p;
  }

  template <typename T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      std::swap(items[i - 1], items[next_below(i)]);
    }
  }

 private:
  std::uint64_t state_;
};

}  // namespace uavfml
