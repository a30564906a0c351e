#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <vector>

#include "rof/fiber.hpp"
#include "rof/rng.hpp"

using namespace rof;

namespace {

// Independent median oracle: same symmetric shrink rule, sort-and-pick-middle.
double median_oracle(const ArrayXd& x, Eigen::Index i, int window) {
  if (window % 2 == 0) ++window;
  const Eigen::Index half = std::min<Eigen::Index>({window / 2, i, x.size() - 1 - i});
  std::vector<double> win(x.data() + (i - half), x.data() + (i + half + 1));
  std::sort(win.begin(), win.end());
  return win[size_t(half)];
}

// Two-tap channel helpers, used for the analytic ingestion round trip.
cplx two_tap_response(cplx b0, cplx b1, double f, double ts) {
  return b0 + b1 * std::exp(-kJ * 2.0 * kPi * f * ts);
}

double two_tap_group_delay(cplx b0, cplx b1, double f, double ts) {
  // tau_g = -(1/2pi) d(arg H)/df = -(1/2pi) Im(H'/H)
  const cplx h = two_tap_response(b0, b1, f, ts);
  const cplx hp = -kJ * 2.0 * kPi * ts * b1 * std::exp(-kJ * 2.0 * kPi * f * ts);
  return -std::imag(hp / h) / (2.0 * kPi);
}

}  // namespace

TEST_CASE("median_smooth: constants and monotone series are fixed points") {
  ArrayXd c(5);
  c << 5, 5, 5, 5, 5;
  const ArrayXd out = median_smooth(c, 3);
  for (Eigen::Index i = 0; i < 5; ++i) CHECK(out(i) == 5.0);

  ArrayXd mono = ArrayXd::LinSpaced(41, -3.0, 7.0);
  const ArrayXd smoothed = median_smooth(mono, 9);
  CHECK(((smoothed - mono).abs() < 1e-15).all());
  // Idempotence on the already-smoothed series.
  const ArrayXd twice = median_smooth(smoothed, 9);
  CHECK(((twice - smoothed).abs() < 1e-15).all());
}

TEST_CASE("median_smooth matches the sort-and-pick-middle oracle") {
  Rng rng(123);
  ArrayXd x(101);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform_in(rng, -10.0, 10.0);
  const ArrayXd out = median_smooth(x, 7);
  for (Eigen::Index i = 0; i < x.size(); ++i) CHECK(out(i) == median_oracle(x, i, 7));
}

TEST_CASE("median_smooth: even windows widen to odd") {
  Rng rng(5);
  ArrayXd x(50);
  for (Eigen::Index i = 0; i < x.size(); ++i) x(i) = uniform_in(rng, 0.0, 1.0);
  CHECK(((median_smooth(x, 4) - median_smooth(x, 5)).abs() == 0.0).all());
}

TEST_CASE("median_smooth rejects bad input") {
  CHECK_THROWS_AS(median_smooth(ArrayXd(), 3), std::invalid_argument);
  ArrayXd x = ArrayXd::Ones(4);
  CHECK_THROWS_AS(median_smooth(x, 0), std::invalid_argument);
  CHECK_THROWS_AS(median_smooth(x, -2), std::invalid_argument);
  CHECK_THROWS_AS(median_smooth(x, 9), std::invalid_argument);
}

TEST_CASE("phase_from_group_delay: constant and zero group delay") {
  const ArrayXd f = ArrayXd::LinSpaced(11, 1e9, 2e9);
  const double tg = 3.2e-9;
  const ArrayXd psi = phase_from_group_delay(f, ArrayXd::Constant(11, tg));
  CHECK(psi(0) == 0.0);
  for (Eigen::Index k = 0; k < f.size(); ++k)
    CHECK(psi(k) == doctest::Approx(-2.0 * kPi * tg * (f(k) - f(0))).epsilon(1e-12));

  const ArrayXd zero = phase_from_group_delay(f, ArrayXd::Zero(11));
  CHECK((zero == 0.0).all());
}

TEST_CASE("phase_from_group_delay matches a dense quadrature oracle") {
  // Piecewise-linear group delay on 16 points; the oracle integrates the
  // linear interpolant with a fine trapezoid rule.
  Rng rng(77);
  ArrayXd f(16), tg(16);
  for (Eigen::Index i = 0; i < 16; ++i) {
    f(i) = 10e9 + 50e6 * double(i);
    tg(i) = uniform_in(rng, 1e-9, 6e-9);
  }
  const ArrayXd psi = phase_from_group_delay(f, tg);

  double acc = 0.0;
  Eigen::Index seg = 0;
  ArrayXd oracle(16);
  oracle(0) = 0.0;
  for (seg = 0; seg + 1 < 16; ++seg) {
    const int fine = 2048;
    const double h = (f(seg + 1) - f(seg)) / fine;
    for (int j = 0; j < fine; ++j) {
      const double t0 = tg(seg) + (tg(seg + 1) - tg(seg)) * double(j) / fine;
      const double t1 = tg(seg) + (tg(seg + 1) - tg(seg)) * double(j + 1) / fine;
      acc += 0.5 * (t0 + t1) * h;
    }
    oracle(seg + 1) = -2.0 * kPi * acc;
  }
  for (Eigen::Index k = 1; k < 16; ++k)
    CHECK(psi(k) == doctest::Approx(oracle(k)).epsilon(1e-9));
}

TEST_CASE("phase_from_group_delay rejects non-monotone frequencies") {
  ArrayXd f(3), tg = ArrayXd::Zero(3);
  f << 1e9, 3e9, 2e9;
  CHECK_THROWS_AS(phase_from_group_delay(f, tg), std::invalid_argument);
  CHECK_THROWS_AS(phase_from_group_delay(ArrayXd::Zero(1), ArrayXd::Zero(1)), std::invalid_argument);
}

TEST_CASE("build_unit_response: identity channel") {
  RawMeasurement meas;
  meas.freqs = ArrayXd::LinSpaced(201, 9e9, 11e9);
  meas.magnitude_db = ArrayXd::Zero(201);
  meas.group_delay = ArrayXd::Zero(201);

  const FrequencyGrid grid = FrequencyGrid::regular(9.5e9, 1e9 / 32, 32);
  const UnitFiberResponse unit = build_unit_response(meas, grid);
  CHECK(((unit.magnitude - 1.0).abs() < 1e-12).all());
  CHECK((unit.phase.abs() < 1e-12).all());
  REQUIRE(unit.taps.size() == 1);
  CHECK(std::abs(unit.taps(0) - cplx(1.0, 0.0)) < 1e-9);
}

TEST_CASE("build_unit_response: analytic two-tap round trip") {
  const double ts = 1e-9;  // 1 GHz grid
  const cplx b0{1.0, 0.0};
  const cplx b1 = 0.35 * std::exp(kJ * 0.4);

  const Eigen::Index n = 14001;
  RawMeasurement meas;
  meas.freqs = ArrayXd::LinSpaced(n, 9.6e9, 11.0e9);
  meas.magnitude_db.resize(n);
  meas.group_delay.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    meas.magnitude_db(i) = 20.0 * std::log10(std::abs(two_tap_response(b0, b1, meas.freqs(i), ts)));
    meas.group_delay(i) = two_tap_group_delay(b0, b1, meas.freqs(i), ts);
  }

  const FrequencyGrid grid = FrequencyGrid::regular(10e9, 1e9 / 32, 32);
  const UnitFiberResponse unit = build_unit_response(meas, grid);
  REQUIRE(unit.taps.size() >= 2);

  // The ingested phase is referenced to zero at the lowest grid frequency;
  // compare taps up to that global rotation.
  const cplx ref = std::exp(-kJ * std::arg(two_tap_response(b0, b1, grid.freqs(0), ts)));
  CHECK(std::abs(unit.taps(0) - b0 * ref) < 1e-6);
  CHECK(std::abs(unit.taps(1) - b1 * ref) < 1e-6);
  for (Eigen::Index l = 2; l < unit.taps.size(); ++l) CHECK(std::abs(unit.taps(l)) < 1e-6);
}

TEST_CASE("build_unit_response rejects a grid outside the measurement span") {
  RawMeasurement meas;
  meas.freqs = ArrayXd::LinSpaced(11, 10e9, 11e9);
  meas.magnitude_db = ArrayXd::Zero(11);
  meas.group_delay = ArrayXd::Zero(11);
  const FrequencyGrid grid = FrequencyGrid::regular(10.5e9, 0.25e9, 4);  // tops out at 11.25e9
  CHECK_THROWS_AS(build_unit_response(meas, grid), std::out_of_range);
}

TEST_CASE("build_unit_response round-trips through the analytic export") {
  RawMeasurement meas;
  const Eigen::Index n = 4001;
  meas.freqs = ArrayXd::LinSpaced(n, 9.4e9, 11.2e9);
  meas.magnitude_db.resize(n);
  meas.group_delay.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double u = (meas.freqs(i) - 10e9) / 1e9;
    meas.magnitude_db(i) = -2.5 - 0.8 * u * u;
    meas.group_delay(i) = 4e-9 + 0.3e-9 * std::cos(2.0 * kPi * u / 3.0);
  }
  const FrequencyGrid grid = FrequencyGrid::regular(9.6e9, 1e9 / 64, 64);
  const UnitFiberResponse unit = build_unit_response(meas, grid);
  const RawMeasurement back = export_measurement(unit);

  for (Eigen::Index k = 2; k < grid.size() - 2; ++k) {
    const double mag_true = -2.5 - 0.8 * std::pow((grid.freqs(k) - 10e9) / 1e9, 2.0);
    const double gd_true = 4e-9 + 0.3e-9 * std::cos(2.0 * kPi * (grid.freqs(k) - 10e9) / 3e9);
    CHECK(back.magnitude_db(k) == doctest::Approx(mag_true).epsilon(1e-4));
    CHECK(back.group_delay(k) == doctest::Approx(gd_true).epsilon(1e-4));
  }
}

TEST_CASE("powered_response: trivial exponents and the repeated-product oracle") {
  SyntheticFiberSpec spec;
  spec.kind = FiberKind::selective;
  spec.total_energy = 48.0;
  spec.delay_taps = 2.0;
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 48, 48);
  const UnitFiberResponse unit = synth_fiber(spec, grid);

  CHECK(((powered_response(unit, 0.0) - 1.0).abs() < 1e-15).all());
  CHECK(((powered_response(unit, 1.0) - unit.spectrum()).abs() < 1e-12).all());

  const ArrayXcd h = unit.spectrum();
  const ArrayXcd h3 = h * h * h;
  const ArrayXcd p3 = powered_response(unit, 3.0);
  CHECK(((p3 - h3).abs() / h3.abs() < 1e-12).all());

  CHECK_THROWS_AS(powered_response(unit, -0.5), std::invalid_argument);
}

TEST_CASE("powered_response: exponent additivity property") {
  SyntheticFiberSpec spec;
  spec.kind = FiberKind::selective;
  spec.total_energy = 32.0;
  spec.ripple_depth = 0.4;
  spec.delay_taps = 1.0;
  spec.quad_phase = 0.6;
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 32, 32);
  const UnitFiberResponse unit = synth_fiber(spec, grid);

  Rng rng(9);
  for (int trial = 0; trial < 50; ++trial) {
    const double a = uniform_in(rng, 0.0, 6.0);
    const double b = uniform_in(rng, 0.0, 6.0 - a > 0 ? 6.0 - a : 0.1);
    const ArrayXcd lhs = powered_response(unit, a + b);
    const ArrayXcd rhs = powered_response(unit, a) * powered_response(unit, b);
    CHECK(((lhs - rhs).abs() / lhs.abs().max(1e-300) < 1e-10).all());
  }
}

TEST_CASE("cascade_taps: hand convolution and the frequency-domain oracle") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 64, 64);

  UnitFiberResponse two;
  two.grid = grid;
  two.taps = ArrayXcd(2);
  two.taps << cplx(1.0, 0.0), cplx(0.5, 0.0);
  const ArrayXcd spec2 = taps_to_spectrum(two.taps, grid);
  two.magnitude = spec2.abs();
  two.phase = spec2.arg();

  CHECK(((cascade_taps(two, 1) - two.taps).abs() == 0.0).all());
  const ArrayXcd sq = cascade_taps(two, 2);
  REQUIRE(sq.size() == 3);
  CHECK(std::abs(sq(0) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(sq(1) - cplx(1.0, 0.0)) < 1e-15);
  CHECK(std::abs(sq(2) - cplx(0.25, 0.0)) < 1e-15);

  // r = 4 over L = 8 random taps vs powered_response on the grid.
  Rng rng(41);
  UnitFiberResponse rnd;
  rnd.grid = grid;
  rnd.taps.resize(8);
  for (Eigen::Index l = 0; l < 8; ++l)
    rnd.taps(l) = cplx(uniform_in(rng, -0.4, 0.4), uniform_in(rng, -0.4, 0.4));
  rnd.taps(0) += 1.2;  // keep magnitude bounded away from zero
  const ArrayXcd spec = taps_to_spectrum(rnd.taps, grid);
  rnd.magnitude = spec.abs();
  rnd.phase = spec.arg();  // integer powers are insensitive to wrapping

  const ArrayXcd c4 = cascade_taps(rnd, 4);
  REQUIRE(c4.size() == 4 * 7 + 1);
  const ArrayXcd lhs = taps_to_spectrum(c4, grid);
  const ArrayXcd rhs = powered_response(rnd, 4.0);
  CHECK(((lhs - rhs).abs() / rhs.abs() < 1e-9).all());

  // Parseval at grid resolution: K >= r(L-1)+1 so the grid determines the taps.
  const double tap_energy = c4.abs2().sum();
  const double grid_energy = rhs.abs2().sum() / double(grid.size());
  CHECK(tap_energy == doctest::Approx(grid_energy).epsilon(1e-6));

  UnitFiberResponse no_taps;
  no_taps.grid = grid;
  no_taps.magnitude = ArrayXd::Ones(64);
  no_taps.phase = ArrayXd::Zero(64);
  CHECK_THROWS_AS(cascade_taps(no_taps, 2), std::logic_error);
  CHECK_THROWS_AS(cascade_taps(two, 0), std::invalid_argument);
}

TEST_CASE("synth_fiber: energy contracts") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 64, 64);

  SyntheticFiberSpec flat;
  flat.kind = FiberKind::flat;
  flat.total_energy = 64.0;
  const UnitFiberResponse f = synth_fiber(flat, grid);
  CHECK(((f.magnitude - 1.0).abs() < 1e-12).all());
  REQUIRE(f.taps.size() == 1);

  SyntheticFiberSpec sel;
  sel.kind = FiberKind::selective;
  sel.total_energy = 64.0;
  sel.ripple_depth = 0.35;
  sel.ripple_cycles = 2.0;
  sel.delay_taps = 2.0;
  const UnitFiberResponse s = synth_fiber(sel, grid);

  // Independent energy summation.
  double e = 0.0;
  for (Eigen::Index k = 0; k < grid.size(); ++k) e += s.magnitude(k) * s.magnitude(k);
  CHECK(e == doctest::Approx(64.0).epsilon(1e-9));
  CHECK(f.magnitude.abs2().sum() == doctest::Approx(e).epsilon(1e-9));

  // Integer ripple cycles with matching delay give a short causal tap set.
  CHECK(s.taps.size() <= 5);

  SyntheticFiberSpec bad = flat;
  bad.total_energy = 0.0;
  CHECK_THROWS_AS(synth_fiber(bad, grid), std::invalid_argument);
}

TEST_CASE("synth_fiber: flat kind with a tap delay keeps a single tap") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 32, 32);
  SyntheticFiberSpec flat;
  flat.kind = FiberKind::flat;
  flat.total_energy = 8.0;
  flat.delay_taps = 3.0;
  const UnitFiberResponse u = synth_fiber(flat, grid);
  REQUIRE(u.taps.size() == 4);
  for (Eigen::Index l = 0; l < 3; ++l) CHECK(std::abs(u.taps(l)) < 1e-9);
  CHECK(std::abs(u.taps(3)) == doctest::Approx(std::sqrt(8.0 / 32.0)).epsilon(1e-9));
  // Linear phase, psi = 0 at the first bin.
  CHECK(u.phase(0) == 0.0);
  const double slope = (u.phase(1) - u.phase(0)) / (grid.freqs(1) - grid.freqs(0));
  CHECK(slope == doctest::Approx(-2.0 * kPi * 3.0 * grid.sample_interval).epsilon(1e-9));
}

TEST_CASE("b_factors") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 16, 16);
  SyntheticFiberSpec flat;
  flat.kind = FiberKind::flat;
  flat.total_energy = 16.0 * 0.25;  // |H| = 0.5
  const UnitFiberResponse u = synth_fiber(flat, grid);

  const ArrayXd b = b_factors(u, 2.0);  // G |H| = 1
  CHECK(((b - 1.0).abs() < 1e-12).all());

  // G of +2.48 dB against a -2.48 dB peak puts b = 1 at the peak bin.
  SyntheticFiberSpec sel;
  sel.kind = FiberKind::selective;
  sel.total_energy = 1.0;
  const UnitFiberResponse s = synth_fiber(sel, grid);
  Eigen::Index peak;
  s.magnitude.maxCoeff(&peak);
  UnitFiberResponse scaled = s;
  scaled.magnitude = s.magnitude * (db_to_linear_amplitude(-2.48) / s.magnitude(peak));
  const ArrayXd bp = b_factors(scaled, db_to_linear_amplitude(2.48));
  CHECK(bp(peak) == doctest::Approx(1.0).epsilon(1e-12));

  // Elementwise oracle.
  Rng rng(3);
  const double g = uniform_in(rng, 0.5, 3.0);
  const ArrayXd bb = b_factors(s, g);
  for (Eigen::Index k = 0; k < grid.size(); ++k)
    CHECK(bb(k) == doctest::Approx(g * s.magnitude(k) * g * s.magnitude(k)).epsilon(1e-14));

  CHECK_THROWS_AS(b_factors(s, 0.0), std::invalid_argument);
}

TEST_CASE("grid invariants") {
  CHECK_THROWS_AS(FrequencyGrid::regular(1e9, 1e6, 1), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyGrid::regular(1e9, -1e6, 8), std::invalid_argument);
  CHECK_THROWS_AS(FrequencyGrid::regular(1e9, 1e6, 8, 4), std::invalid_argument);

  FrequencyGrid g = FrequencyGrid::regular(1e9, 1e6, 8);
  CHECK(g.critically_sampled());
  CHECK(g.bandwidth() == doctest::Approx(8e6));
  g.freqs(3) += 1.0;  // break uniformity beyond 1e-9 relative
  CHECK_THROWS_AS(g.validate(), std::invalid_argument);
}
