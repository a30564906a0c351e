#pragma once

#include <cstdint>
#include <complex>
#include <random>

namespace rof {

using Rng = std::mt19937_64;

/// splitmix64 mixing step (Vigna). Used to derive independent stream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

/// Deterministic per-(sweep, trial) stream seed from a master seed. Streams
/// derived for distinct (a, b) pairs are independent for practical purposes,
/// so trials can run concurrently without perturbing each other's draws.
inline std::uint64_t derive_stream_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  std::uint64_t s = master;
  std::uint64_t h = splitmix64(s);
  s ^= a * 0xD6E8FEB86659FD93ULL + 0x2545F4914F6CDD1DULL;
  h ^= splitmix64(s);
  s ^= b * 0xA24BAED4963EE407ULL + 0x9FB21C651E98DF25ULL;
  h ^= splitmix64(s);
  return h;
}

inline Rng make_stream(std::uint64_t master, std::uint64_t a, std::uint64_t b) {
  return Rng(derive_stream_seed(master, a, b));
}

/// Uniform double in [0, 1). Draws exactly one engine value.
inline double uniform01(Rng& rng) {
  return (rng() >> 11) * 0x1.0p-53;
}

inline double uniform_in(Rng& rng, double lo, double hi) {
  return lo + (hi - lo) * uniform01(rng);
}

/// Standard normal pair via Box-Muller; consumes exactly two engine values.
inline void gauss_pair(Rng& rng, double& n0, double& n1) {
  double u1 = uniform01(rng);
  double u2 = uniform01(rng);
  // u1 = 0 would hit log(0); nudge to the smallest representable draw.
  if (u1 <= 0.0) u1 = 0x1.0p-53;
  const double rad = std::sqrt(-2.0 * std::log(u1));
  const double ang = 2.0 * 3.141592653589793238462643383279502884 * u2;
  n0 = rad * std::cos(ang);
  n1 = rad * std::sin(ang);
}

inline double gauss(Rng& rng, double stddev) {
  double a, b;
  gauss_pair(rng, a, b);
  return stddev * a;
}

/// Circularly symmetric complex Gaussian CN(0, sigma2):
/// variance sigma2/2 per real and imaginary component.
inline std::complex<double> complex_gauss(Rng& rng, double sigma2) {
  double a, b;
  gauss_pair(rng, a, b);
  const double s = std::sqrt(0.5 * sigma2);
  return {s * a, s * b};
}

}  // namespace rof
