#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "rof/crlb.hpp"
#include "rof/estimation.hpp"
#include "rof/rng.hpp"

using namespace rof;

namespace {

UnitFiberResponse flat_fiber(const FrequencyGrid& grid, double gain, double delay_taps = 0.0) {
  SyntheticFiberSpec spec;
  spec.kind = FiberKind::flat;
  spec.total_energy = double(grid.size()) / (gain * gain);
  spec.delay_taps = delay_taps;
  return synth_fiber(spec, grid);
}

UnitFiberResponse selective_fiber(const FrequencyGrid& grid, double energy, double depth = 0.35,
                                  double quad = 0.8) {
  SyntheticFiberSpec spec;
  spec.kind = FiberKind::selective;
  spec.total_energy = energy;
  spec.ripple_depth = depth;
  spec.ripple_cycles = 2.0;
  spec.delay_taps = 2.0;
  spec.quad_phase = quad;
  return synth_fiber(spec, grid);
}

// Independent Fisher-matrix assembly: central finite differences of
// mean_vector plus the closed-form diagonal covariance and its r derivative.
// The covariance depends on r alone, so the trace term only feeds (r, r).
Eigen::Matrix4d numeric_fim(const ThetaParams& theta, const PilotSequence& pilot,
                            const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid,
                            double sigma2, NoiseRegime regime) {
  const Eigen::Index k = grid.size();
  const double f_max = grid.freqs(k - 1);

  std::array<ArrayXcd, 4> dmu;
  for (int i = 0; i < 4; ++i) {
    double h;
    if (i == 2) {
      h = 1e-5 / (2.0 * kPi * f_max);  // tau lives on the carrier-period scale
    } else {
      const double mag = i == 0   ? std::abs(theta.amplitude)
                         : i == 1 ? std::abs(theta.phase)
                                  : std::abs(theta.stages);
      h = 1e-6 * std::max(1.0, mag);
    }
    ThetaParams plus = theta, minus = theta;
    double* fields_plus[4] = {&plus.amplitude, &plus.phase, &plus.tau, &plus.stages};
    double* fields_minus[4] = {&minus.amplitude, &minus.phase, &minus.tau, &minus.stages};
    *fields_plus[i] += h;
    *fields_minus[i] -= h;
    dmu[size_t(i)] = (mean_vector(plus, pilot, unit, gain, grid) -
                      mean_vector(minus, pilot, unit, gain, grid)) /
                     (2.0 * h);
  }

  ArrayXd var(k), dvar(k);
  if (regime == NoiseRegime::flat) {
    var = ArrayXd::Constant(k, (theta.stages + 1.0) * sigma2);
    dvar = ArrayXd::Constant(k, sigma2);
  } else {
    const ArrayXd b = b_factors(unit, gain);
    for (Eigen::Index i = 0; i < k; ++i) {
      var(i) = sigma2 * (std::pow(b(i), theta.stages + 1.0) - 1.0) / (b(i) - 1.0);
      dvar(i) = sigma2 * std::pow(b(i), theta.stages + 1.0) * std::log(b(i)) / (b(i) - 1.0);
    }
  }

  Eigen::Matrix4d fim = Eigen::Matrix4d::Zero();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      double mean_term =
          2.0 * (dmu[size_t(i)].conjugate() * dmu[size_t(j)] / var.cast<cplx>()).sum().real();
      double trace_term = 0.0;
      if (i == 3 && j == 3) trace_term = (dvar / var).square().sum();
      fim(i, j) = trace_term + mean_term;
    }
  return fim;
}

void check_fim_match(const Eigen::Matrix4d& closed, const Eigen::Matrix4d& numeric, double rel) {
  const double scale = closed.cwiseAbs().maxCoeff();
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) {
      const double tol = rel * std::max(std::abs(closed(i, j)), 1e-9 * scale);
      CHECK(std::abs(closed(i, j) - numeric(i, j)) <= tol);
    }
}

}  // namespace

TEST_CASE("mean_vector: identity with g_vector and closed forms") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 16, 16);
  const PilotSequence pilot = PilotSequence::qpsk(16, 7);
  const UnitFiberResponse fiber = selective_fiber(grid, 16.0);

  ThetaParams theta{0.8, 0.9, 2e-9, 2.5};
  const ArrayXcd mu = mean_vector(theta, pilot, fiber, 1.3, grid);
  const ArrayXcd g = g_vector(theta.stages, theta.tau, pilot, fiber, 1.3, grid);
  const cplx a = std::polar(theta.amplitude, theta.phase);
  CHECK(((mu - a * g).abs() < 1e-9 * mu.abs().maxCoeff()).all());

  // r = 0 closed form.
  ThetaParams t0{0.8, 0.9, 2e-9, 0.0};
  const ArrayXcd mu0 = mean_vector(t0, pilot, fiber, 1.3, grid);
  for (Eigen::Index k = 0; k < 16; ++k) {
    const cplx ref = 1.3 * 0.8 * pilot.symbols(k) *
                     std::exp(kJ * (0.9 - 2.0 * kPi * grid.freqs(k) * 2e-9));
    CHECK(std::abs(mu0(k) - ref) < 1e-11);
  }

  // Random theta elementwise oracle.
  Rng rng(3);
  for (int t = 0; t < 10; ++t) {
    ThetaParams th{uniform_in(rng, 0.1, 2.0), uniform_in(rng, -3.0, 3.0),
                   uniform_in(rng, 0.0, 4e-9), uniform_in(rng, 0.0, 5.0)};
    const ArrayXcd m = mean_vector(th, pilot, fiber, 1.3, grid);
    for (Eigen::Index k = 0; k < 16; ++k) {
      const cplx ref = std::pow(1.3, th.stages + 1.0) * th.amplitude *
                       std::pow(fiber.magnitude(k), th.stages) * pilot.symbols(k) *
                       std::exp(kJ * (th.phase + th.stages * fiber.phase(k) -
                                      2.0 * kPi * grid.freqs(k) * th.tau));
      CHECK(std::abs(m(k) - ref) < 1e-9 * std::abs(ref) + 1e-11);
    }
  }
}

TEST_CASE("mu_derivatives: phase identity, finite differences, flat specialization") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 8, 8);
  const PilotSequence pilot = PilotSequence::qpsk(8, 5);
  const double gain = 1.6;
  const UnitFiberResponse sel = selective_fiber(grid, 8.0);
  const ThetaParams theta{0.9, -0.4, 1.5e-9, 2.0};

  const auto d = mu_derivatives(theta, pilot, sel, gain, grid, NoiseRegime::selective);
  const ArrayXcd mu = mean_vector(theta, pilot, sel, gain, grid);
  CHECK(((d[1] - kJ * mu).abs() < 1e-12 * mu.abs().maxCoeff()).all());

  // Central finite differences of mean_vector.
  const double f_max = grid.freqs(7);
  for (int i = 0; i < 4; ++i) {
    const double h = i == 2 ? 1e-5 / (2.0 * kPi * f_max) : 1e-6;
    ThetaParams plus = theta, minus = theta;
    double* fp[4] = {&plus.amplitude, &plus.phase, &plus.tau, &plus.stages};
    double* fm[4] = {&minus.amplitude, &minus.phase, &minus.tau, &minus.stages};
    *fp[i] += h;
    *fm[i] -= h;
    const ArrayXcd fd = (mean_vector(plus, pilot, sel, gain, grid) -
                         mean_vector(minus, pilot, sel, gain, grid)) /
                        (2.0 * h);
    const double scale = fd.abs().maxCoeff();
    CHECK(((d[size_t(i)] - fd).abs() <= 1e-4 * scale).all());
  }

  // Flat regime: r derivative loses the ln sqrt(b) factor; with b = 1 the
  // selective expression collapses onto it.
  const UnitFiberResponse flat = flat_fiber(grid, gain, 4.0);
  const auto df = mu_derivatives(theta, pilot, flat, gain, grid, NoiseRegime::flat);
  const auto ds = mu_derivatives(theta, pilot, flat, gain, grid, NoiseRegime::selective);
  CHECK(((df[3] - ds[3]).abs() < 1e-9 * df[3].abs().maxCoeff() + 1e-15).all());
  const ArrayXcd mu_flat = mean_vector(theta, pilot, flat, gain, grid);
  CHECK(((df[3] - kJ * flat.phase.cast<cplx>() * mu_flat).abs() <
         1e-12 * mu_flat.abs().maxCoeff())
            .all());
}

TEST_CASE("fim_flat: paper entries and the numeric assembly oracle") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 8, 8);
  const PilotSequence pilot = PilotSequence::qpsk(8, 11);
  const double gain = 1.9;
  const UnitFiberResponse fiber = flat_fiber(grid, gain, 3.0);

  const ThetaParams theta{1.2, 0.5, 2e-9, 3.0};
  const double sigma2 = 0.25;
  const FisherMatrix fim = fim_flat(theta, pilot, fiber, gain, grid, sigma2);

  // [I]_{|A|,|A|} = 2 G^2 K / ((r+1) sigma^2) for unit-modulus pilots.
  CHECK(fim.entries(0, 0) ==
        doctest::Approx(2.0 * gain * gain * 8.0 / (4.0 * sigma2)).epsilon(1e-12));
  CHECK(fim.entries(0, 1) == 0.0);
  CHECK(fim.entries(0, 2) == 0.0);
  CHECK(fim.entries(0, 3) == 0.0);

  // Exact symmetry by construction.
  CHECK((fim.entries - fim.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(17);
  for (int t = 0; t < 20; ++t) {
    const ThetaParams th{uniform_in(rng, 0.3, 2.0), uniform_in(rng, -3.0, 3.0),
                         uniform_in(rng, 0.0, 4e-9), uniform_in(rng, 0.0, 5.0)};
    const FisherMatrix closed = fim_flat(th, pilot, fiber, gain, grid, sigma2);
    const Eigen::Matrix4d numeric =
        numeric_fim(th, pilot, fiber, gain, grid, sigma2, NoiseRegime::flat);
    check_fim_match(closed.entries, numeric, 1e-6);
  }
}

TEST_CASE("fim_selective: coupling, numeric oracle, and the b -> 1 limit") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 8, 8);
  const PilotSequence pilot = PilotSequence::qpsk(8, 13);
  const double gain = 1.1;
  const UnitFiberResponse fiber = selective_fiber(grid, 8.0 / (gain * gain));

  const ThetaParams theta{0.9, -0.6, 1e-9, 3.0};
  const double sigma2 = 0.1;
  const FisherMatrix fim = fim_selective(theta, pilot, fiber, gain, grid, sigma2);
  CHECK(std::abs(fim.entries(0, 3)) > 1e-3);  // |A|-r coupling appears
  CHECK((fim.entries - fim.entries.transpose()).cwiseAbs().maxCoeff() == 0.0);

  Rng rng(29);
  for (int t = 0; t < 20; ++t) {
    const ThetaParams th{uniform_in(rng, 0.3, 2.0), uniform_in(rng, -3.0, 3.0),
                         uniform_in(rng, 0.0, 4e-9), uniform_in(rng, 0.0, 5.0)};
    const FisherMatrix closed = fim_selective(th, pilot, fiber, gain, grid, sigma2);
    const Eigen::Matrix4d numeric =
        numeric_fim(th, pilot, fiber, gain, grid, sigma2, NoiseRegime::selective);
    check_fim_match(closed.entries, numeric, 1e-4);
  }

  // b_k -> 1 from either side approaches the flat entries.
  const UnitFiberResponse flat = flat_fiber(grid, gain, 2.0);
  const FisherMatrix ref = fim_flat(theta, pilot, flat, gain, grid, sigma2);
  for (double eps : {1e-6, -1e-6}) {
    UnitFiberResponse near = flat;
    near.magnitude = flat.magnitude * std::sqrt(1.0 + eps);
    const FisherMatrix lim = fim_selective(theta, pilot, near, gain, grid, sigma2);
    for (int i = 0; i < 4; ++i)
      for (int j = 0; j < 4; ++j) {
        const double tol =
            1e-4 * std::max(std::abs(ref.entries(i, j)), 1e-9 * ref.entries.cwiseAbs().maxCoeff());
        CHECK(std::abs(lim.entries(i, j) - ref.entries(i, j)) <= tol);
      }
  }

  // b_k = 1 anywhere is a regime violation.
  CHECK_THROWS_AS(fim_selective(theta, pilot, flat, gain, grid, sigma2), std::domain_error);
}

TEST_CASE("FIM is positive semidefinite across random parameter points") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 16, 16);
  const PilotSequence pilot = PilotSequence::qpsk(16, 19);
  const double gain = 1.4;
  const UnitFiberResponse sel = selective_fiber(grid, 16.0 / (gain * gain));
  const UnitFiberResponse flat = flat_fiber(grid, gain, 5.0);

  Rng rng(31);
  for (int t = 0; t < 25; ++t) {
    const ThetaParams th{uniform_in(rng, 0.2, 2.0), uniform_in(rng, -3.0, 3.0),
                         uniform_in(rng, 0.0, 3e-9), uniform_in(rng, 0.0, 5.0)};
    for (int regime = 0; regime < 2; ++regime) {
      const FisherMatrix fim = regime == 0
                                   ? fim_flat(th, pilot, flat, gain, grid, 0.2)
                                   : fim_selective(th, pilot, sel, gain, grid, 0.2);
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(fim.entries);
      CHECK(eig.eigenvalues()(0) >= -1e-9 * fim.entries.trace());
    }
  }
}

TEST_CASE("tau information scales with the squared-frequency sum") {
  const PilotSequence pilot = PilotSequence::qpsk(16, 23);
  const ThetaParams theta{1.0, 0.0, 1e-9, 2.0};
  const double gain = 1.5;

  const FrequencyGrid g1 = FrequencyGrid::regular(140e9, 1e9 / 16, 16);
  const FrequencyGrid g2 = FrequencyGrid::regular(140e9, 2e9 / 16, 16);
  const FisherMatrix f1 = fim_flat(theta, pilot, flat_fiber(g1, gain), gain, g1, 0.3);
  const FisherMatrix f2 = fim_flat(theta, pilot, flat_fiber(g2, gain), gain, g2, 0.3);
  const double predicted = g2.freqs.square().sum() / g1.freqs.square().sum();
  CHECK(f2.entries(2, 2) / f1.entries(2, 2) == doctest::Approx(predicted).epsilon(1e-9));
}

TEST_CASE("crlb_from_fim: diagonal case, cofactor oracle, pseudo-inverse flag") {
  FisherMatrix diag;
  diag.entries = Eigen::Vector4d(2.0, 4.0, 8.0, 10.0).asDiagonal();
  const CrlbResult d = crlb_from_fim(diag);
  CHECK(!d.pseudo_inverse_used);
  CHECK(d.variances(0) == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(d.variances(1) == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(d.variances(2) == doctest::Approx(0.125).epsilon(1e-12));
  CHECK(d.variances(3) == doctest::Approx(0.1).epsilon(1e-12));
  // Conditioning is measured on the equilibrated matrix; any diagonal is 1.
  CHECK(d.condition_number == doctest::Approx(1.0).epsilon(1e-12));

  // Random SPD matrix vs a cofactor-expansion inverse.
  Rng rng(37);
  Eigen::Matrix4d m;
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < 4; ++j) m(i, j) = uniform_in(rng, -1.0, 1.0);
  Eigen::Matrix4d spd = m * m.transpose() + 0.5 * Eigen::Matrix4d::Identity();
  FisherMatrix f;
  f.entries = spd;
  const CrlbResult got = crlb_from_fim(f);

  // Cofactor expansion: inv(ii) = C_ii / det.
  const double det = spd.determinant();
  for (int i = 0; i < 4; ++i) {
    Eigen::Matrix3d minor;
    for (int r = 0, rr = 0; r < 4; ++r) {
      if (r == i) continue;
      for (int c = 0, cc = 0; c < 4; ++c) {
        if (c == i) continue;
        minor(rr, cc) = spd(r, c);
        ++cc;
      }
      ++rr;
    }
    CHECK(got.variances(i) == doctest::Approx(minor.determinant() / det).epsilon(1e-10));
  }

  // Near-singular matrix trips the pseudo-inverse path.
  Eigen::Matrix4d sing = spd;
  sing.row(3) = sing.row(2) * (1.0 + 1e-15);
  sing.col(3) = sing.col(2) * (1.0 + 1e-15);
  sing(3, 3) = sing(2, 2);
  FisherMatrix fs;
  fs.entries = 0.5 * (sing + sing.transpose());
  const CrlbResult ps = crlb_from_fim(fs);
  CHECK(ps.pseudo_inverse_used);
  CHECK(ps.variances.allFinite());

  FisherMatrix nan_fim;
  nan_fim.entries(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(crlb_from_fim(nan_fim), std::invalid_argument);
}

TEST_CASE("flat-fiber r bound is sigma^2-independent and equals (r+1)^2/K") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 64, 64);
  const PilotSequence pilot = PilotSequence::qpsk(64, 41);
  const double gain = db_to_linear_amplitude(2.48);
  const ThetaParams theta{1.0, 0.0, 2e-9, 3.0};

  // Zero fiber phase: r decouples from (phi, tau) and the bound is exactly
  // (r+1)^2/K at any noise level.
  const UnitFiberResponse fiber = flat_fiber(grid, gain, 0.0);
  double ref = 0.0;
  for (double sigma2 : {1e-4, 1e-2, 1.0}) {
    const CrlbResult crlb = crlb_from_fim(fim_flat(theta, pilot, fiber, gain, grid, sigma2));
    CHECK(!crlb.pseudo_inverse_used);
    if (ref == 0.0) ref = crlb.variances(3);
    CHECK(std::abs(crlb.variances(3) - ref) / ref < 0.01);
    CHECK(crlb.variances(3) == doctest::Approx(16.0 / 64.0).epsilon(1e-6));
  }

  // Affine (nonzero-slope) phase keeps the same bound while the FIM is
  // invertible; at very high SNR the phi-tau-r coupling crosses the 1e12
  // threshold and the truncated pseudo-inverse bound is flagged instead.
  const UnitFiberResponse delayed = flat_fiber(grid, gain, 6.0);
  for (double sigma2 : {1e-2, 1.0}) {
    const CrlbResult crlb = crlb_from_fim(fim_flat(theta, pilot, delayed, gain, grid, sigma2));
    CHECK(!crlb.pseudo_inverse_used);
    CHECK(crlb.variances(3) == doctest::Approx(16.0 / 64.0).epsilon(1e-3));
  }
  const CrlbResult flagged =
      crlb_from_fim(fim_flat(theta, pilot, delayed, gain, grid, 1e-4));
  CHECK(flagged.pseudo_inverse_used);
}

TEST_CASE("selective fiber lowers the r bound at equal channel energy") {
  const FrequencyGrid grid = FrequencyGrid::regular(140e9, 1e9 / 64, 64);
  const PilotSequence pilot = PilotSequence::qpsk(64, 43);
  const double gain = db_to_linear_amplitude(2.48);
  const double energy = 64.0 / (gain * gain);  // b = 1 for the flat profile
  const ThetaParams theta{1.0, 0.0, 2e-9, 3.0};

  const UnitFiberResponse flat = flat_fiber(grid, gain, 0.0);
  const UnitFiberResponse sel = selective_fiber(grid, energy, 0.35, 0.0);
  CHECK(flat.magnitude.abs2().sum() == doctest::Approx(sel.magnitude.abs2().sum()).epsilon(1e-9));

  for (double sigma2 : {1e-4, 1e-2, 1.0}) {
    const double flat_bound =
        crlb_from_fim(fim_flat(theta, pilot, flat, gain, grid, sigma2)).variances(3);
    const double sel_bound =
        crlb_from_fim(fim_selective(theta, pilot, sel, gain, grid, sigma2)).variances(3);
    CHECK(sel_bound < flat_bound);
  }
}
