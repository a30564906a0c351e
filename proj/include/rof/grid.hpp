#pragma once

#include "rof/common.hpp"

namespace rof {

/// Common frequency axis for all spectra: K discrete frequencies f_k (Hz,
/// strictly increasing, uniform spacing), the sampling interval T_s and the
/// number N of time samples per block.
struct FrequencyGrid {
  ArrayXd freqs;
  double sample_interval = 0.0;  // T_s, seconds
  Index n_time = 0;              // N >= K

  /// Regular grid starting at f0 with spacing df. By default T_s = 1/(K df)
  /// (critically sampled complex baseband) and N = K.
  static FrequencyGrid regular(double f0, double df, Index k,
                               Index n_time = -1, double sample_interval = -1.0);

  Index size() const { return freqs.size(); }
  double spacing() const { return (freqs(freqs.size() - 1) - freqs(0)) / double(freqs.size() - 1); }
  double bandwidth() const { return spacing() * double(freqs.size()); }

  /// True when T_s * df * K == 1, the alignment needed for the tap <-> grid
  /// spectrum duality used by the time-domain cascade.
  bool critically_sampled(double tol = 1e-9) const;

  /// Throws std::invalid_argument when an invariant is violated
  /// (K >= 2, uniform spacing to 1e-9 relative, T_s > 0, N >= K).
  void validate() const;
};

}  // namespace rof
