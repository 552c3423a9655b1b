#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace chargeflow {

// Counter-based generator: the output at a counter depends only on
// (seed, stream, counter), so chunked Monte Carlo can be split any way
// without changing the samples.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  static std::uint64_t mix(std::uint64_t z) {
    z += 0x9e3779b97f4a7c15ULL;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  std::uint64_t bits(std::uint64_t counter) const {
    return mix(key_ ^ mix(counter));
  }

  // uniform in the open interval (0, 1)
  double uniform(std::uint64_t counter) const {
    return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
  }

  // two independent standard normals from counters 2c and 2c+1
  void normal_pair(std::uint64_t c, double& z0, double& z1) const {
    const double u1 = uniform(2 * c);
    const double u2 = uniform(2 * c + 1);
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    z0 = rad * std::cos(ang);
    z1 = rad * std::sin(ang);
  }

 private:
  std::uint64_t key_;
};

// Sequential convenience wrapper.
class Rng {
 public:
  explicit Rng(std::uint64_t seed, std::uint64_t stream = 0) : gen_(seed, stream) {}

  double uniform() { return gen_.uniform(counter_++); }
  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    double z0, z1;
    gen_.normal_pair(pair_counter_++, z0, z1);
    spare_ = z1;
    has_spare_ = true;
    return z0;
  }

  // integer in [0, n)
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(uniform() * static_cast<double>(n)) % n;
  }

 private:
  CounterRng gen_;
  std::uint64_t counter_ = 0;
  // normals come from a disjoint counter range
  std::uint64_t pair_counter_ = 0x4000000000000000ULL;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

}  // namespace chargeflow
