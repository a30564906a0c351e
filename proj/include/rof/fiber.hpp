#pragma once

#include "rof/common.hpp"
#include "rof/grid.hpp"

namespace rof {

/// One magnitude/group-delay trace of a unit-length fiber, as produced by a
/// network analyzer sweep: per-unit-length magnitude in dB and group delay in
/// seconds on an increasing frequency axis.
struct RawMeasurement {
  ArrayXd freqs;         // Hz, strictly increasing
  ArrayXd magnitude_db;  // dB per unit length
  ArrayXd group_delay;   // s per unit length

  void validate() const;
};

/// Per-frequency response of a unit-length fiber on a grid. The phase psi is
/// stored unwrapped (psi = 0 at the lowest grid frequency); taps, when
/// present, reproduce the grid spectrum through
///   H_k = sum_l taps[l] * exp(-j 2 pi f_k l T_s).
struct UnitFiberResponse {
  FrequencyGrid grid;
  ArrayXd magnitude;  // |H_k|, linear, >= 0
  ArrayXd phase;      // psi_k, radians, unwrapped
  ArrayXcd taps;      // beta_l, may be empty

  bool has_taps() const { return taps.size() > 0; }
  ArrayXcd spectrum() const;  // |H| .* exp(j psi)
};

enum class FiberKind { flat, selective };

/// Synthetic unit-fiber description. Both kinds carry total energy
/// E = sum_k |H_k|^2. The selective kind uses a raised-cosine magnitude
/// ripple; delay_taps sets the linear phase slope (in units of T_s) and is
/// what keeps the selective tap set causal and short when ripple_cycles is
/// an integer.
struct SyntheticFiberSpec {
  FiberKind kind = FiberKind::flat;
  double total_energy = 1.0;
  double ripple_depth = 0.35;   // selective only, in (0, 1)
  double ripple_cycles = 2.0;   // magnitude ripple periods across the band
  double ripple_phase = 0.25;   // ripple offset, fraction of a period
  double delay_taps = 0.0;      // linear phase slope, units of T_s
  double quad_phase = 0.0;      // optional quadratic phase coefficient, rad at band edge
};

/// Centered median filter with the window shrunk symmetrically at the edges;
/// even windows are widened to the next odd size. Output length equals input
/// length.
ArrayXd median_smooth(const Eigen::Ref<const ArrayXd>& series, int window);

/// Phase recovered from group delay by trapezoidal integration on the given
/// frequencies: psi_0 = 0, psi_k = -2 pi * integral_{f_0}^{f_k} tau_g df.
ArrayXd phase_from_group_delay(const Eigen::Ref<const ArrayXd>& freqs,
                               const Eigen::Ref<const ArrayXd>& group_delay);

/// Builds the unit response on `grid` from a measurement: linear
/// interpolation in (dB, group-delay) space, phase integration on the grid,
/// and tap extraction by inverse grid DFT truncated so the discarded tail
/// holds < 1e-4 of the tap energy (grown further if needed to keep the
/// spectrum reconstruction within 1e-6 of max |H|).
UnitFiberResponse build_unit_response(const RawMeasurement& meas, const FrequencyGrid& grid);

/// |H_k|^r * exp(j r psi_k) per bin; fractional r uses the unwrapped phase.
ArrayXcd powered_response(const UnitFiberResponse& unit, double r);

/// r-fold linear self-convolution of the taps; output length r(L-1)+1.
ArrayXcd cascade_taps(const UnitFiberResponse& unit, int r);

/// Synthesizes a flat or frequency-selective unit fiber with
/// sum_k |H_k|^2 = spec.total_energy on the grid, including its taps.
UnitFiberResponse synth_fiber(const SyntheticFiberSpec& spec, const FrequencyGrid& grid);

/// Per-bin squared loop gain b_k = (G |H_k|)^2.
ArrayXd b_factors(const UnitFiberResponse& unit, double gain);

/// Linear convolution helper (full length: a.size() + b.size() - 1).
ArrayXcd convolve(const Eigen::Ref<const ArrayXcd>& a, const Eigen::Ref<const ArrayXcd>& b);

/// Grid DFT pair used for tap extraction. These treat tap index l as a delay
/// of l*T_s and evaluate on the grid's absolute frequencies.
ArrayXcd taps_to_spectrum(const Eigen::Ref<const ArrayXcd>& taps, const FrequencyGrid& grid);
ArrayXcd spectrum_to_taps(const Eigen::Ref<const ArrayXcd>& spectrum, const FrequencyGrid& grid);

/// Analytic re-export of a unit response to measurement columns
/// (magnitude in dB and group delay from the centered phase differences).
RawMeasurement export_measurement(const UnitFiberResponse& unit);

}  // namespace rof
