#pragma once

#include "rof/common.hpp"
#include "rof/fiber.hpp"
#include "rof/grid.hpp"
#include "rof/rng.hpp"

namespace rof {

/// Known pilot transmitted over the K bins; unit amplitude per symbol.
struct PilotSequence {
  ArrayXcd symbols;
  std::string modulation = "qpsk";

  static PilotSequence qpsk(Index k, std::uint64_t seed);
  void validate() const;
};

/// Wireless hop between the UE and the entry RU: complex coefficient
/// A = amplitude * exp(j phase) and delay tau = distance / c + clock_offset.
struct WirelessLink {
  double amplitude = 1.0;
  double phase = 0.0;
  double tau = 0.0;           // seconds
  double clock_offset = 0.0;  // seconds
  double distance = 0.0;      // meters

  static WirelessLink from_geometry(double distance_m, double clock_offset_s,
                                    double amplitude, double phase);
  cplx coefficient() const { return std::polar(amplitude, phase); }
};

struct PaParams {
  double gain = 1.0;    // G, linear
  double nonlin = 0.0;  // lambda, 1/V^2; 0 selects the linear regime
};

/// One RoF cascade: r amplify-and-filter stages behind the entry RU, each
/// adding CN(0, noise_var) per element, sharing one PA model and one
/// unit-length fiber. `oversample` applies to the time-domain path.
struct ChainParams {
  double stages = 0.0;     // r; integer for simulation, real for analysis
  double noise_var = 0.0;  // sigma^2 per complex sample per stage
  PaParams pa;
  UnitFiberResponse fiber;
  int oversample = 1;
};

struct PathlossParams {
  double tx_gain = 1.0;
  double rx_gain = 1.0;
  double wavelength = kSpeedOfLight / 140e9;  // meters
  double shadow_sigma_db = 0.0;
};

/// Input spectrum at the RoF: x_k = |A| e^{j phi} e^{-j 2 pi f_k tau} s_k.
ArrayXcd wireless_input(const WirelessLink& link, const PilotSequence& pilot,
                        const FrequencyGrid& grid);

/// LoS pathloss amplitude with log-normal shadowing of the configured dB
/// standard deviation. One Gaussian pair is drawn iff shadow_sigma_db > 0.
double pathloss_amplitude(const PathlossParams& p, double distance_m, Rng& rng);

/// Effective noise variance per bin after r stages: (r+1) sigma^2 where
/// b_k = 1, else sigma^2 (b_k^{r+1} - 1)/(b_k - 1); continuous in r.
ArrayXd effective_noise_variance(const Eigen::Ref<const ArrayXd>& b, double r, double sigma2);

/// Frequency-domain propagation in the linear PA regime:
/// y_k = G^{r+1} H_k^r x_k + w_k with w_k ~ CN(0, effective variance).
/// Noise is drawn in ascending bin order.
ArrayXcd propagate_linear(const Eigen::Ref<const ArrayXcd>& x, const ChainParams& chain, Rng& rng);

/// Time-domain block for the given spectrum, zero-padded in frequency by
/// `oversample`: x_n = (1/K) sum_k x_k e^{j 2 pi n k / (N * oversample)},
/// n = 0 .. N*oversample - 1.
ArrayXcd time_domain_input(const Eigen::Ref<const ArrayXcd>& x, const FrequencyGrid& grid,
                           int oversample);

/// Static third-order PA: y = G (x + lambda x |x|^2).
ArrayXcd pa_apply(const Eigen::Ref<const ArrayXcd>& x, const PaParams& pa);

/// One amplify-and-filter stage: causal FIR through the fiber taps (full
/// linear convolution, zero initial state, taps spaced by the oversampling
/// stride) followed by the PA polynomial.
ArrayXcd stage_function(const Eigen::Ref<const ArrayXcd>& y, const ChainParams& chain);

/// Time-domain propagation in the (non)linear regime: entry PA plus noise,
/// r recursive stages, then one noise term at the CU. Noise only enters at
/// the entry and the CU; sample order is ascending per block.
ArrayXcd propagate_nonlinear(const Eigen::Ref<const ArrayXcd>& x_time, const ChainParams& chain,
                             Rng& rng);

/// Grid spectrum of a time-domain block of any length (kernel wrapped with
/// period N * oversample): X_k = (K / (N q)) sum_n y_n e^{-j 2 pi n k/(N q)}.
ArrayXcd spectrum_from_time(const Eigen::Ref<const ArrayXcd>& y_time, const FrequencyGrid& grid,
                            int oversample);

}  // namespace rof
