#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

#include "twosys/common.hpp"

namespace twosys {

// Counter-based random streams. Every consumer derives its own stream key from
// (seed, run, system, particle, sweep, ...) so results do not depend on
// scheduling or worker count, and the bit stream is identical across
// platforms (no std::*_distribution, whose output is implementation-defined).

namespace detail {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

inline std::uint64_t splitmix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}
}  // namespace detail

/// Fold one 64-bit label into a stream key.
inline std::uint64_t mix_key(std::uint64_t key, std::uint64_t label) {
  return detail::splitmix64(key ^ (label + detail::kGolden + (key << 6) + (key >> 2)));
}

template <typename... Labels>
inline std::uint64_t derive_key(std::uint64_t seed, Labels... labels) {
  std::uint64_t key = detail::splitmix64(seed + detail::kGolden);
  ((key = mix_key(key, static_cast<std::uint64_t>(labels))), ...);
  return key;
}

/// Splittable counter RNG; one instance per (stream key) with local counter.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t key) : state_(key) {}

  std::uint64_t next_u64() {
    state_ += detail::kGolden;
    return detail::splitmix64(state_);
  }

  /// Uniform on [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on the open interval (0, 1); safe to pass through log().
  double uniform_open() {
    return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
  }

  /// Standard normal via Box-Muller; consumes exactly two 64-bit words.
  double normal() {
    double u1 = uniform_open();
    double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  Vector normal_vector(Eigen::Index n) {
    Vector v(n);
    for (Eigen::Index i = 0; i < n; ++i) v[i] = normal();
    return v;
  }

 private:
  std::uint64_t state_;
};

// Stream labels. Keys are derived as derive_key(seed, kind, a, b, c) so that
// distinct (kind, sweep, system, particle) tuples never share a stream.
enum class StreamKind : std::uint64_t {
  init_velocity = 1,
  proposal = 2,
  sweep_shared = 3,
  spd_basis = 4,
  tuning = 5,
};

/// Per-run stream factory; run_key already encodes (root seed, run index).
struct RunStreams {
  std::uint64_t run_key = 0;

  CounterRng particle(long sweep, int system, int particle) const {
    return CounterRng(derive_key(run_key, static_cast<std::uint64_t>(StreamKind::proposal),
                                 static_cast<std::uint64_t>(sweep),
                                 static_cast<std::uint64_t>(system),
                                 static_cast<std::uint64_t>(particle)));
  }

  CounterRng sweep_shared(long sweep, int system) const {
    return CounterRng(derive_key(run_key, static_cast<std::uint64_t>(StreamKind::sweep_shared),
                                 static_cast<std::uint64_t>(sweep),
                                 static_cast<std::uint64_t>(system), 0));
  }

  CounterRng init_velocity(int system, int particle) const {
    return CounterRng(derive_key(run_key, static_cast<std::uint64_t>(StreamKind::init_velocity),
                                 static_cast<std::uint64_t>(system),
                                 static_cast<std::uint64_t>(particle), 0));
  }
};

inline RunStreams run_streams(std::uint64_t root_seed, int run_index) {
  return RunStreams{derive_key(root_seed, 0xabcdULL, static_cast<std::uint64_t>(run_index))};
}

}  // namespace twosys
