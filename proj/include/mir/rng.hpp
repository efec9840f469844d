#pragma once

#include <cmath>
#include <cstdint>

namespace mir {

// Counter-derived pseudo-random generator (splitmix64 core). Each
// (base_seed, replication, role) triple yields an independent stream, so
// replications can run in any order on any number of threads and still
// produce identical draws.
class Rng {
 public:
  explicit Rng(std::uint64_t state) : state_(state) {}

  static Rng derive(std::uint64_t base_seed, std::uint64_t rep, std::uint64_t role) {
    std::uint64_t h = mix(base_seed + 0x9E3779B97F4A7C15ULL * (rep + 1));
    h = mix(h ^ (0xBF58476D1CE4E5B9ULL * (role + 1)));
    return Rng(h);
  }

  std::uint64_t next_u64() {
    state_ += 0x9E3779B97F4A7C15ULL;
    return mix(state_);
  }

  // Uniform on (0,1), 53-bit resolution, never exactly 0 or 1.
  double uniform() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via Box-Muller (cosine branch only, for stream simplicity).
  double normal() {
    double u1 = uniform();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // exp(1) - 1: mean 0, variance 1.
  double std_exponential() { return -std::log(uniform()) - 1.0; }

  // 0.9 N(0, 5/9) + 0.1 N(0, 5): mean 0, variance 1.
  double mixture_normal() {
    double u = uniform();
    double s = (u < 0.9) ? std::sqrt(5.0 / 9.0) : std::sqrt(5.0);
    return s * normal();
  }

 private:
  static std::uint64_t mix(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

  std::uint64_t state_;
};

}  // namespace mir
