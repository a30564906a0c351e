#pragma once

#include <Eigen/Dense>
#include <complex>
#include <cmath>

namespace rof {

using Eigen::ArrayXd;
using Eigen::ArrayXcd;
using Eigen::Index;
using cplx = std::complex<double>;

inline constexpr double kPi = 3.141592653589793238462643383279502884;
inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr cplx kJ{0.0, 1.0};

/// Noise-covariance regime of the linear cascade: b_k = 1 for all bins
/// (flat) or b_k != 1 (frequency selective).
enum class NoiseRegime { flat, selective };

template <typename Derived>
auto db_to_linear_amplitude(const Eigen::ArrayBase<Derived>& db) {
  return Eigen::pow(10.0, db / 20.0);
}

inline double db_to_linear_amplitude(double db) { return std::pow(10.0, db / 20.0); }
inline double linear_amplitude_to_db(double a) { return 20.0 * std::log10(a); }

/// Wrap an angle to [-pi, pi).
inline double wrap_angle(double a) {
  a = std::fmod(a + kPi, 2.0 * kPi);
  if (a < 0.0) a += 2.0 * kPi;
  return a - kPi;
}

}  // namespace rof
