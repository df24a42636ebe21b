#pragma once

// Scalar Brownian increments and the seed-derivation scheme that gives
// every Monte Carlo path, and every derived experiment, its own
// reproducible stream.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace sllb {

// derive_seed(base, id) = finalize(base + (id+1) * 0x9E3779B97F4A7C15)
// with the splitmix64 finalizer
//   z ^= z >> 30;  z *= 0xBF58476D1CE4E5B9;
//   z ^= z >> 27;  z *= 0x94D049BB133111EB;
//   z ^= z >> 31;
// The finalizer is a bijection on 64-bit words (odd multipliers,
// invertible xor-shifts) and id -> base + (id+1)*GOLDEN is injective mod
// 2^64, so distinct stream ids always get distinct seeds for a fixed base.
inline std::uint64_t derive_seed(std::uint64_t base_seed, std::uint64_t stream_id) {
  std::uint64_t z = base_seed + (stream_id + 1) * 0x9E3779B97F4A7C15ULL;
  z ^= z >> 30;
  z *= 0xBF58476D1CE4E5B9ULL;
  z ^= z >> 27;
  z *= 0x94D049BB133111EBULL;
  z ^= z >> 31;
  return z;
}

namespace detail {

// Box-Muller on explicit mt19937_64 words.  std::normal_distribution is
// implementation-defined, which would make "same seed, same trajectory"
// a per-libstdc++ statement instead of a documented one.
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : eng_(seed) {}

  double next() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    const double u1 = uniform01();
    const double u2 = uniform01();
    const double r = std::sqrt(-2.0 * std::log(u1));
    const double a = 2.0 * std::numbers::pi * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

private:
  double uniform01() {
    // strictly inside (0,1): top 53 bits, then offset by half an ulp
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  std::mt19937_64 eng_;
  double spare_ = 0.0;
  bool have_spare_ = false;
};

} // namespace detail

// One scalar Wiener path on [0,T], stored as its J increments.
struct WienerPath {
  double T = 0.0;
  int steps = 0;
  std::uint64_t seed = 0;
  std::vector<double> increments; // increments[j] ~ N(0, T/steps)
};

inline WienerPath sample_wiener(double T, int steps, std::uint64_t seed) {
  if (!(T > 0.0)) throw std::invalid_argument("sample_wiener: T must be positive");
  if (steps < 1) throw std::invalid_argument("sample_wiener: steps must be >= 1");
  WienerPath w{T, steps, seed, {}};
  w.increments.resize(static_cast<std::size_t>(steps));
  detail::GaussianStream g(seed);
  const double sdt = std::sqrt(T / steps);
  for (auto& dw : w.increments) dw = sdt * g.next();
  return w;
}

// Block-sum a fine path onto a coarser grid with steps_coarse | w.steps.
// The result is the restriction of the same Brownian path, which is what
// lets time-step studies hold the randomness fixed across resolutions.
inline WienerPath coarsen(const WienerPath& w, int steps_coarse) {
  if (steps_coarse < 1 || w.steps % steps_coarse != 0)
    throw std::invalid_argument("coarsen: steps_coarse=" + std::to_string(steps_coarse) +
                                " must divide steps=" + std::to_string(w.steps));
  const int block = w.steps / steps_coarse;
  WienerPath out{w.T, steps_coarse, w.seed, {}};
  out.increments.resize(static_cast<std::size_t>(steps_coarse));
  for (int j = 0; j < steps_coarse; ++j) {
    double s = 0.0;
    for (int b = 0; b < block; ++b) s += w.increments[static_cast<std::size_t>(j) * block + b];
    out.increments[static_cast<std::size_t>(j)] = s;
  }
  return out;
}

} // namespace sllb
