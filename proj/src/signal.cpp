#include "rof/signal.hpp"

#include <stdexcept>

namespace rof {

namespace {

// One period of e^{j 2 pi n / length}; indexing with (n*k) % length keeps the
// DFT kernels exactly periodic with no phase drift on long blocks.
ArrayXcd twiddle_table(Index length) {
  ArrayXcd w(length);
  for (Index n = 0; n < length; ++n)
    w(n) = std::polar(1.0, 2.0 * kPi * double(n) / double(length));
  return w;
}

Index tap_stride(const ChainParams& chain) {
  const FrequencyGrid& grid = chain.fiber.grid;
  const Index k = grid.size();
  const Index n_eff = grid.n_time * Index(chain.oversample);
  if (n_eff % k != 0)
    throw std::invalid_argument("time-domain cascade: n_time * oversample must be a multiple of K");
  if (!grid.critically_sampled())
    throw std::invalid_argument("time-domain cascade: grid must satisfy T_s * df * K = 1");
  return n_eff / k;
}

}  // namespace

PilotSequence PilotSequence::qpsk(Index k, std::uint64_t seed) {
  Rng rng(seed);
  PilotSequence p;
  p.symbols.resize(k);
  for (Index i = 0; i < k; ++i) {
    const int q = int(rng() & 3u);
    p.symbols(i) = std::polar(1.0, kPi / 4.0 + kPi / 2.0 * double(q));
  }
  return p;
}

void PilotSequence::validate() const {
  if (symbols.size() == 0) throw std::invalid_argument("PilotSequence: empty");
  if (((symbols.abs() - 1.0).abs() > 1e-12).any())
    throw std::invalid_argument("PilotSequence: symbols must have unit amplitude");
}

WirelessLink WirelessLink::from_geometry(double distance_m, double clock_offset_s,
                                         double amplitude, double phase) {
  WirelessLink link;
  link.distance = distance_m;
  link.clock_offset = clock_offset_s;
  link.tau = distance_m / kSpeedOfLight + clock_offset_s;
  link.amplitude = amplitude;
  link.phase = phase;
  return link;
}

ArrayXcd wireless_input(const WirelessLink& link, const PilotSequence& pilot,
                        const FrequencyGrid& grid) {
  if (pilot.symbols.size() != grid.size())
    throw std::invalid_argument("wireless_input: pilot/grid length mismatch");
  const cplx a = link.coefficient();
  return a * (-kJ * 2.0 * kPi * link.tau * grid.freqs).exp() * pilot.symbols;
}

double pathloss_amplitude(const PathlossParams& p, double distance_m, Rng& rng) {
  if (!(distance_m > 0.0)) throw std::invalid_argument("pathloss_amplitude: distance must be positive");
  const double ratio = p.wavelength / (2.0 * kPi * distance_m);
  double amp = p.tx_gain * p.rx_gain * ratio * ratio;
  if (p.shadow_sigma_db > 0.0) {
    const double shadow_db = gauss(rng, p.shadow_sigma_db);
    amp *= db_to_linear_amplitude(shadow_db);
  }
  return std::max(amp, 0.0);
}

ArrayXd effective_noise_variance(const Eigen::Ref<const ArrayXd>& b, double r, double sigma2) {
  if (r < 0.0) throw std::invalid_argument("effective_noise_variance: r must be nonnegative");
  if (sigma2 < 0.0) throw std::invalid_argument("effective_noise_variance: sigma2 must be nonnegative");
  ArrayXd var(b.size());
  for (Index k = 0; k < b.size(); ++k) {
    if (std::abs(b(k) - 1.0) <= 1e-9) {
      var(k) = (r + 1.0) * sigma2;
    } else {
      // (b^{r+1} - 1)/(b - 1) via expm1 keeps full precision near b = 1.
      const double lb = std::log(b(k));
      var(k) = sigma2 * std::expm1((r + 1.0) * lb) / std::expm1(lb);
    }
  }
  return var;
}

ArrayXcd propagate_linear(const Eigen::Ref<const ArrayXcd>& x, const ChainParams& chain, Rng& rng) {
  if (chain.pa.nonlin != 0.0)
    throw std::logic_error("propagate_linear: nonlinear PA configured; use propagate_nonlinear");
  if (x.size() != chain.fiber.grid.size())
    throw std::invalid_argument("propagate_linear: spectrum/grid length mismatch");
  const double r = chain.stages;
  const double g_total = std::pow(chain.pa.gain, r + 1.0);
  ArrayXcd y = g_total * powered_response(chain.fiber, r) * x;
  if (chain.noise_var > 0.0) {
    const ArrayXd var =
        effective_noise_variance(b_factors(chain.fiber, chain.pa.gain), r, chain.noise_var);
    for (Index k = 0; k < y.size(); ++k) y(k) += complex_gauss(rng, var(k));
  }
  return y;
}

ArrayXcd time_domain_input(const Eigen::Ref<const ArrayXcd>& x, const FrequencyGrid& grid,
                           int oversample) {
  if (oversample < 1) throw std::invalid_argument("time_domain_input: oversample must be >= 1");
  if (x.size() != grid.size())
    throw std::invalid_argument("time_domain_input: spectrum/grid length mismatch");
  const Index k = grid.size();
  const Index n_eff = grid.n_time * Index(oversample);
  const ArrayXcd w = twiddle_table(n_eff);
  ArrayXcd out = ArrayXcd::Zero(n_eff);
  for (Index n = 0; n < n_eff; ++n) {
    cplx acc = 0.0;
    for (Index kk = 0; kk < k; ++kk) acc += x(kk) * w((n * kk) % n_eff);
    out(n) = acc / double(k);
  }
  return out;
}

ArrayXcd pa_apply(const Eigen::Ref<const ArrayXcd>& x, const PaParams& pa) {
  if (pa.nonlin == 0.0) return pa.gain * x;
  return pa.gain * (x + pa.nonlin * x * x.abs2().cast<cplx>());
}

ArrayXcd stage_function(const Eigen::Ref<const ArrayXcd>& y, const ChainParams& chain) {
  if (!chain.fiber.has_taps()) throw std::logic_error("stage_function: fiber has no taps");
  const Index stride = tap_stride(chain);
  const ArrayXcd& taps = chain.fiber.taps;
  ArrayXcd filtered = ArrayXcd::Zero(y.size() + stride * (taps.size() - 1));
  for (Index l = 0; l < taps.size(); ++l) filtered.segment(l * stride, y.size()) += taps(l) * y;
  return pa_apply(filtered, chain.pa);
}

ArrayXcd propagate_nonlinear(const Eigen::Ref<const ArrayXcd>& x_time, const ChainParams& chain,
                             Rng& rng) {
  const double r_round = std::round(chain.stages);
  if (chain.stages < 0.0 || std::abs(chain.stages - r_round) > 1e-9)
    throw std::invalid_argument("propagate_nonlinear: stages must be a nonnegative integer");
  const int r = int(r_round);

  ArrayXcd y = pa_apply(x_time, chain.pa);
  if (chain.noise_var > 0.0)
    for (Index n = 0; n < y.size(); ++n) y(n) += complex_gauss(rng, chain.noise_var);
  for (int stage = 0; stage < r; ++stage) y = stage_function(y, chain);
  if (chain.noise_var > 0.0)
    for (Index n = 0; n < y.size(); ++n) y(n) += complex_gauss(rng, chain.noise_var);
  return y;
}

ArrayXcd spectrum_from_time(const Eigen::Ref<const ArrayXcd>& y_time, const FrequencyGrid& grid,
                            int oversample) {
  if (oversample < 1) throw std::invalid_argument("spectrum_from_time: oversample must be >= 1");
  const Index k = grid.size();
  const Index n_eff = grid.n_time * Index(oversample);
  const ArrayXcd w = twiddle_table(n_eff);
  ArrayXcd spec(k);
  for (Index kk = 0; kk < k; ++kk) {
    cplx acc = 0.0;
    for (Index n = 0; n < y_time.size(); ++n)
      acc += y_time(n) * std::conj(w((n * kk) % n_eff));
    spec(kk) = acc * double(k) / double(n_eff);
  }
  return spec;
}

}  // namespace rof
