#include "rof/grid.hpp"

#include <stdexcept>
#include <string>

namespace rof {

FrequencyGrid FrequencyGrid::regular(double f0, double df, Index k,
                                     Index n_time, double sample_interval) {
  if (k < 2) throw std::invalid_argument("FrequencyGrid: need at least 2 frequencies");
  if (df <= 0.0) throw std::invalid_argument("FrequencyGrid: spacing must be positive");
  FrequencyGrid g;
  g.freqs = f0 + df * ArrayXd::LinSpaced(k, 0.0, double(k - 1));
  g.n_time = n_time < 0 ? k : n_time;
  g.sample_interval = sample_interval < 0.0 ? 1.0 / (df * double(k)) : sample_interval;
  g.validate();
  return g;
}

bool FrequencyGrid::critically_sampled(double tol) const {
  return std::abs(sample_interval * spacing() * double(size()) - 1.0) <= tol;
}

void FrequencyGrid::validate() const {
  const Index k = freqs.size();
  if (k < 2) throw std::invalid_argument("FrequencyGrid: K >= 2 required");
  if (!(sample_interval > 0.0)) throw std::invalid_argument("FrequencyGrid: T_s must be positive");
  if (n_time < k) throw std::invalid_argument("FrequencyGrid: N >= K required");
  const double df = spacing();
  if (!(df > 0.0)) throw std::invalid_argument("FrequencyGrid: frequencies must increase");
  for (Index i = 1; i < k; ++i) {
    const double step = freqs(i) - freqs(i - 1);
    if (!(step > 0.0)) throw std::invalid_argument("FrequencyGrid: frequencies must be strictly increasing");
    if (std::abs(step - df) > 1e-9 * df)
      throw std::invalid_argument("FrequencyGrid: spacing not uniform at index " + std::to_string(i));
  }
}

}  // namespace rof
