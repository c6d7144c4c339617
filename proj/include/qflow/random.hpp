#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include <Eigen/Geometry>

namespace qflow {

// Counter-based generator: every (seed, stream, counter) triple maps to one
// 64-bit value, so draws for different points or fields never depend on
// evaluation order.
class CounterRng {
public:
  explicit CounterRng(std::uint64_t seed, std::uint64_t stream = 0)
      : key_(mix(seed ^ mix(stream + 0x632be59bd9b4e019ULL))) {}

  std::uint64_t bits(std::uint64_t counter) const { return mix(key_ + counter * 0x9e3779b97f4a7c15ULL); }

  // uniform in [0, 1) with 53 random bits
  double uniform(std::uint64_t counter) const { return double(bits(counter) >> 11) * 0x1.0p-53; }
  double uniform(std::uint64_t counter, double a, double b) const { return a + (b - a) * uniform(counter); }

  CounterRng split(std::uint64_t stream) const { return CounterRng(key_, stream); }

  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t key_;
};

// Uniformly distributed rotation from three draws starting at `counter`
// (Shoemake's subgroup algorithm).
inline Eigen::Matrix3d random_rotation(const CounterRng& rng, std::uint64_t counter) {
  const double u1 = rng.uniform(counter), u2 = rng.uniform(counter + 1), u3 = rng.uniform(counter + 2);
  const double a = std::sqrt(1 - u1), b = std::sqrt(u1);
  const double t2 = 2 * std::numbers::pi * u2, t3 = 2 * std::numbers::pi * u3;
  const Eigen::Quaterniond q(b * std::cos(t3), a * std::sin(t2), a * std::cos(t2), b * std::sin(t3));
  return q.toRotationMatrix();
}

} // namespace qflow
