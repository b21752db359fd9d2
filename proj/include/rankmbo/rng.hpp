#pragma once

// Seeded random source with platform-independent output.
//
// std::mt19937_64 has a fully specified output sequence, but the standard
// distributions (uniform_real_distribution, normal_distribution, shuffle)
// are implementation-defined. Everything on top of the raw engine lives
// here so that a seed reproduces the same stream under any toolchain.

#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <random>
#include <utility>
#include <vector>

#include "rankmbo/error.hpp"

namespace rankmbo {

class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  // Uniform integer in [0, n) by rejection, free of modulo bias.
  std::size_t index(std::size_t n) {
    require(n > 0, "Rng::index requires n > 0");
    const std::uint64_t bound = static_cast<std::uint64_t>(n);
    const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() -
                                std::numeric_limits<std::uint64_t>::max() % bound;
    std::uint64_t draw = engine_();
    while (draw >= limit) draw = engine_();
    return static_cast<std::size_t>(draw % bound);
  }

  // Marsaglia polar method; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double u = 0.0, v = 0.0, s = 0.0;
    do {
      u = 2.0 * uniform() - 1.0;
      v = 2.0 * uniform() - 1.0;
      s = u * u + v * v;
    } while (s >= 1.0 || s == 0.0);
    const double factor = std::sqrt(-2.0 * std::log(s) / s);
    spare_ = v * factor;
    has_spare_ = true;
    return u * factor;
  }

  // Marsaglia-Tsang, with the shape < 1 boost.
  double gamma(double shape) {
    require(shape > 0.0, "gamma shape must be positive");
    if (shape < 1.0) {
      const double boost = std::pow(uniform_open(), 1.0 / shape);
      return gamma(shape + 1.0) * boost;
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = 0.0, v = 0.0;
      do {
        x = normal();
        v = 1.0 + c * x;
      } while (v <= 0.0);
      v = v * v * v;
      const double u = uniform_open();
      if (u < 1.0 - 0.0331 * x * x * x * x) return d * v;
      if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double chi_square(double dof) { return 2.0 * gamma(0.5 * dof); }

  // Ratio construction: Z / sqrt(V / nu), V ~ chi-square(nu).
  double student_t(double dof) {
    require(dof > 0.0, "student_t degrees of freedom must be positive");
    const double z = normal();
    const double v = chi_square(dof);
    return z / std::sqrt(v / dof);
  }

  template <class T>
  void shuffle(std::vector<T>& items) {
    for (std::size_t i = items.size(); i > 1; --i) {
      const std::size_t j = index(i);
      std::swap(items[i - 1], items[j]);
    }
  }

  std::vector<std::size_t> permutation(std::size_t n) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    shuffle(order);
    return order;
  }

  // m distinct indices from [0, n), in sampled order (partial Fisher-Yates).
  std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t m) {
    require(m <= n, "cannot sample more distinct indices than available");
    std::vector<std::size_t> pool(n);
    std::iota(pool.begin(), pool.end(), std::size_t{0});
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t j = i + index(n - i);
      std::swap(pool[i], pool[j]);
    }
    pool.resize(m);
    return pool;
  }

  // Derives an independent child seed; used to split one seed across stages.
  static std::uint64_t mix(std::uint64_t seed, std::uint64_t stream) {
    std::uint64_t z = seed + 0x9E3779B97F4A7C15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

 private:
  double uniform_open() {
    double u = uniform();
    while (u == 0.0) u = uniform();
    return u;
  }

  std::mt19937_64 engine_;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace rankmbo
