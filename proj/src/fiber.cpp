#include "rof/fiber.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>
#include <vector>

namespace rof {

namespace {

// Linear interpolation of (x, y) samples onto query points xq. x must be
// strictly increasing and cover all of xq.
ArrayXd interp_linear(const ArrayXd& x, const ArrayXd& y, const ArrayXd& xq) {
  ArrayXd out(xq.size());
  for (Index i = 0; i < xq.size(); ++i) {
    const double q = xq(i);
    if (q < x(0) || q > x(x.size() - 1))
      throw std::out_of_range("interp_linear: query outside sample span");
    const double* begin = x.data();
    const double* end = x.data() + x.size();
    const double* hi = std::lower_bound(begin, end, q);
    if (hi == begin) {
      out(i) = y(0);
      continue;
    }
    const Index j = Index(hi - begin);
    if (j == x.size()) {
      out(i) = y(x.size() - 1);
      continue;
    }
    const double t = (q - x(j - 1)) / (x(j) - x(j - 1));
    out(i) = (1.0 - t) * y(j - 1) + t * y(j);
  }
  return out;
}

// Truncation: smallest head length whose discarded tail holds < 1e-4 of the
// tap energy while keeping the grid-spectrum reconstruction within
// 1e-6 * max|H|.
ArrayXcd truncate_taps(const ArrayXcd& full, const ArrayXcd& spectrum, const FrequencyGrid& grid) {
  const Index k = full.size();
  const double energy = full.abs2().sum();
  const double mag_cap = 1e-6 * spectrum.abs().maxCoeff();

  Index best = k;
  double tail_energy = 0.0;
  ArrayXcd tail_spec = ArrayXcd::Zero(grid.size());
  const ArrayXd omega = 2.0 * kPi * grid.freqs * grid.sample_interval;
  for (Index cand = k - 1; cand >= 1; --cand) {
    tail_energy += std::norm(full(cand));
    tail_spec += full(cand) * (-kJ * double(cand) * omega).exp();
    if (tail_energy < 1e-4 * energy && tail_spec.abs().maxCoeff() <= mag_cap)
      best = cand;
    else
      break;
  }
  return full.head(best);
}

}  // namespace

void RawMeasurement::validate() const {
  if (freqs.size() == 0) throw std::invalid_argument("RawMeasurement: empty");
  if (freqs.size() != magnitude_db.size() || freqs.size() != group_delay.size())
    throw std::invalid_argument("RawMeasurement: column lengths differ");
  for (Index i = 1; i < freqs.size(); ++i)
    if (!(freqs(i) > freqs(i - 1)))
      throw std::invalid_argument("RawMeasurement: frequencies must be strictly increasing");
}

ArrayXcd UnitFiberResponse::spectrum() const {
  return magnitude.cast<cplx>() * (kJ * phase).exp();
}

ArrayXd median_smooth(const Eigen::Ref<const ArrayXd>& series, int window) {
  if (series.size() == 0) throw std::invalid_argument("median_smooth: empty series");
  if (window <= 0) throw std::invalid_argument("median_smooth: window must be positive");
  if (window % 2 == 0) ++window;
  const Index n = series.size();
  if (Index(window) > n) throw std::invalid_argument("median_smooth: window exceeds series length");

  ArrayXd out(n);
  std::vector<double> scratch;
  scratch.reserve(size_t(window));
  const Index half_max = Index(window / 2);
  for (Index i = 0; i < n; ++i) {
    const Index half = std::min({half_max, i, n - 1 - i});
    scratch.assign(series.data() + (i - half), series.data() + (i + half + 1));
    auto mid = scratch.begin() + half;
    std::nth_element(scratch.begin(), mid, scratch.end());
    out(i) = *mid;
  }
  return out;
}

ArrayXd phase_from_group_delay(const Eigen::Ref<const ArrayXd>& freqs,
                               const Eigen::Ref<const ArrayXd>& group_delay) {
  if (freqs.size() != group_delay.size())
    throw std::invalid_argument("phase_from_group_delay: length mismatch");
  if (freqs.size() < 2)
    throw std::invalid_argument("phase_from_group_delay: need at least 2 points");
  ArrayXd psi(freqs.size());
  psi(0) = 0.0;
  for (Index i = 1; i < freqs.size(); ++i) {
    const double df = freqs(i) - freqs(i - 1);
    if (!(df > 0.0))
      throw std::invalid_argument("phase_from_group_delay: frequencies must be strictly increasing");
    psi(i) = psi(i - 1) - 2.0 * kPi * 0.5 * (group_delay(i) + group_delay(i - 1)) * df;
  }
  return psi;
}

UnitFiberResponse build_unit_response(const RawMeasurement& meas, const FrequencyGrid& grid) {
  meas.validate();
  grid.validate();
  if (grid.freqs(0) < meas.freqs(0) || grid.freqs(grid.size() - 1) > meas.freqs(meas.freqs.size() - 1))
    throw std::out_of_range("build_unit_response: grid extends outside the measurement span");

  UnitFiberResponse unit;
  unit.grid = grid;
  const ArrayXd mag_db = interp_linear(meas.freqs, meas.magnitude_db, grid.freqs);
  unit.magnitude = db_to_linear_amplitude(mag_db);
  // Integrate on the (dense) measurement grid, then resample and re-reference
  // the phase to the lowest grid frequency.
  const ArrayXd psi_meas = phase_from_group_delay(meas.freqs, meas.group_delay);
  ArrayXd psi = interp_linear(meas.freqs, psi_meas, grid.freqs);
  psi -= psi(0);
  unit.phase = psi;

  const ArrayXcd spec = unit.spectrum();
  unit.taps = truncate_taps(spectrum_to_taps(spec, grid), spec, grid);
  return unit;
}

ArrayXcd powered_response(const UnitFiberResponse& unit, double r) {
  if (r < 0.0) throw std::invalid_argument("powered_response: r must be nonnegative");
  if (r == 0.0) return ArrayXcd::Ones(unit.magnitude.size());
  return unit.magnitude.pow(r).cast<cplx>() * (kJ * r * unit.phase).exp();
}

ArrayXcd convolve(const Eigen::Ref<const ArrayXcd>& a, const Eigen::Ref<const ArrayXcd>& b) {
  ArrayXcd out = ArrayXcd::Zero(a.size() + b.size() - 1);
  for (Index i = 0; i < a.size(); ++i) out.segment(i, b.size()) += a(i) * b;
  return out;
}

ArrayXcd cascade_taps(const UnitFiberResponse& unit, int r) {
  if (!unit.has_taps()) throw std::logic_error("cascade_taps: no taps available");
  if (r < 1) throw std::invalid_argument("cascade_taps: r must be a positive integer");
  ArrayXcd acc = unit.taps;
  for (int i = 1; i < r; ++i) acc = convolve(acc, unit.taps);
  return acc;
}

UnitFiberResponse synth_fiber(const SyntheticFiberSpec& spec, const FrequencyGrid& grid) {
  grid.validate();
  if (!(spec.total_energy > 0.0)) throw std::invalid_argument("synth_fiber: total_energy must be positive");
  const Index k = grid.size();

  UnitFiberResponse unit;
  unit.grid = grid;
  if (spec.kind == FiberKind::flat) {
    unit.magnitude = ArrayXd::Constant(k, std::sqrt(spec.total_energy / double(k)));
  } else {
    if (!(spec.ripple_depth > 0.0 && spec.ripple_depth < 1.0))
      throw std::invalid_argument("synth_fiber: ripple_depth must be in (0, 1)");
    const ArrayXd idx = ArrayXd::LinSpaced(k, 0.0, double(k - 1));
    ArrayXd profile =
        1.0 + spec.ripple_depth * (2.0 * kPi * (spec.ripple_cycles * idx / double(k) + spec.ripple_phase)).cos();
    unit.magnitude = profile * std::sqrt(spec.total_energy / profile.abs2().sum());
  }

  const ArrayXd rel = grid.freqs - grid.freqs(0);
  unit.phase = -2.0 * kPi * rel * spec.delay_taps * grid.sample_interval;
  if (spec.quad_phase != 0.0) {
    const ArrayXd x = rel / rel(k - 1);
    unit.phase += spec.quad_phase * x.square();
  }

  const ArrayXcd spec_h = unit.spectrum();
  unit.taps = truncate_taps(spectrum_to_taps(spec_h, grid), spec_h, grid);
  return unit;
}

ArrayXd b_factors(const UnitFiberResponse& unit, double gain) {
  if (!(gain > 0.0)) throw std::invalid_argument("b_factors: gain must be positive");
  return (gain * unit.magnitude).square();
}

ArrayXcd taps_to_spectrum(const Eigen::Ref<const ArrayXcd>& taps, const FrequencyGrid& grid) {
  const ArrayXd omega = 2.0 * kPi * grid.freqs * grid.sample_interval;
  ArrayXcd spec = ArrayXcd::Zero(grid.size());
  for (Index l = 0; l < taps.size(); ++l) spec += taps(l) * (-kJ * double(l) * omega).exp();
  return spec;
}

ArrayXcd spectrum_to_taps(const Eigen::Ref<const ArrayXcd>& spectrum, const FrequencyGrid& grid) {
  if (spectrum.size() != grid.size())
    throw std::invalid_argument("spectrum_to_taps: spectrum/grid size mismatch");
  if (!grid.critically_sampled())
    throw std::invalid_argument("spectrum_to_taps: grid must satisfy T_s * df * K = 1");
  const Index k = grid.size();
  const ArrayXd omega = 2.0 * kPi * grid.freqs * grid.sample_interval;
  ArrayXcd taps(k);
  for (Index l = 0; l < k; ++l)
    taps(l) = (spectrum * (kJ * double(l) * omega).exp()).sum() / double(k);
  return taps;
}

RawMeasurement export_measurement(const UnitFiberResponse& unit) {
  const Index k = unit.grid.size();
  RawMeasurement meas;
  meas.freqs = unit.grid.freqs;
  meas.magnitude_db = 20.0 * unit.magnitude.log10();
  meas.group_delay.resize(k);
  const ArrayXd& f = unit.grid.freqs;
  const ArrayXd& psi = unit.phase;
  const double inv2pi = 1.0 / (2.0 * kPi);
  meas.group_delay(0) = -(psi(1) - psi(0)) / (f(1) - f(0)) * inv2pi;
  for (Index i = 1; i + 1 < k; ++i)
    meas.group_delay(i) = -(psi(i + 1) - psi(i - 1)) / (f(i + 1) - f(i - 1)) * inv2pi;
  meas.group_delay(k - 1) = -(psi(k - 1) - psi(k - 2)) / (f(k - 1) - f(k - 2)) * inv2pi;
  return meas;
}

}  // namespace rof
