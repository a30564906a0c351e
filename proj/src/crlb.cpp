#include "rof/crlb.hpp"

#include <cmath>
#include <stdexcept>

namespace rof {

namespace {

constexpr double kCondThreshold = 1e12;

ArrayXcd phase_factor(const ThetaParams& theta, const UnitFiberResponse& unit,
                      const FrequencyGrid& grid) {
  // Omega_k = phi + r psi_k - 2 pi f_k tau
  return (kJ * (theta.phase + theta.stages * unit.phase - 2.0 * kPi * theta.tau * grid.freqs)).exp();
}

void mirror_lower(Eigen::Matrix4d& m) {
  for (int i = 0; i < 4; ++i)
    for (int j = 0; j < i; ++j) m(i, j) = m(j, i);
}

}  // namespace

ArrayXcd mean_vector(const ThetaParams& theta, const PilotSequence& pilot,
                     const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid) {
  const double scale = std::pow(gain, theta.stages + 1.0) * theta.amplitude;
  return scale * unit.magnitude.pow(theta.stages).cast<cplx>() * pilot.symbols *
         phase_factor(theta, unit, grid);
}

std::array<ArrayXcd, 4> mu_derivatives(const ThetaParams& theta, const PilotSequence& pilot,
                                       const UnitFiberResponse& unit, double gain,
                                       const FrequencyGrid& grid, NoiseRegime regime) {
  // d mu / d|A| evaluated without dividing by |A| so |A| = 0 stays valid.
  const ArrayXcd unit_amp = std::pow(gain, theta.stages + 1.0) *
                            unit.magnitude.pow(theta.stages).cast<cplx>() * pilot.symbols *
                            phase_factor(theta, unit, grid);
  const ArrayXcd mu = theta.amplitude * unit_amp;

  std::array<ArrayXcd, 4> d;
  d[0] = unit_amp;
  d[1] = kJ * mu;
  d[2] = -kJ * 2.0 * kPi * grid.freqs.cast<cplx>() * mu;
  ArrayXcd r_factor = kJ * unit.phase.cast<cplx>();
  if (regime == NoiseRegime::selective)
    r_factor += (gain * unit.magnitude).log().cast<cplx>();  // ln sqrt(b_k) = ln(G |H_k|)
  d[3] = r_factor * mu;
  return d;
}

FisherMatrix fim_flat(const ThetaParams& theta, const PilotSequence& pilot,
                      const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid,
                      double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("fim_flat: sigma2 must be positive");
  if (theta.stages < 0.0) throw std::invalid_argument("fim_flat: r must be nonnegative");
  const double k = double(grid.size());
  const double nu = (theta.stages + 1.0) * sigma2;
  const ArrayXd s2 = pilot.symbols.abs2();
  const ArrayXd& psi = unit.phase;
  const ArrayXd& f = grid.freqs;
  const double g2 = gain * gain;
  const double a = theta.amplitude;

  FisherMatrix fim;
  fim.regime = NoiseRegime::flat;
  Eigen::Matrix4d& m = fim.entries;
  m(0, 0) = 2.0 * g2 / nu * s2.sum();
  m(0, 1) = m(0, 2) = m(0, 3) = 0.0;
  m(1, 1) = 2.0 * g2 * a * a / nu * s2.sum();
  m(1, 2) = -4.0 * kPi * g2 * a * a / nu * (f * s2).sum();
  m(1, 3) = 2.0 * g2 * a * a / nu * (psi * s2).sum();
  m(2, 2) = 8.0 * kPi * kPi * g2 * a * a / nu * (f.square() * s2).sum();
  m(2, 3) = -4.0 * kPi * g2 * a * a / nu * (f * psi * s2).sum();
  m(3, 3) = k / ((theta.stages + 1.0) * (theta.stages + 1.0)) +
            2.0 * g2 * a * a / nu * (psi.square() * s2).sum();
  mirror_lower(m);
  return fim;
}

FisherMatrix fim_selective(const ThetaParams& theta, const PilotSequence& pilot,
                           const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid,
                           double sigma2) {
  if (!(sigma2 > 0.0)) throw std::invalid_argument("fim_selective: sigma2 must be positive");
  if (theta.stages < 0.0) throw std::invalid_argument("fim_selective: r must be nonnegative");
  const ArrayXd b = b_factors(unit, gain);
  if (((b - 1.0).abs() <= 1e-9).any())
    throw std::domain_error("fim_selective: some b_k is 1 (flat regime); use fim_flat");

  const double r = theta.stages;
  const ArrayXd var = effective_noise_variance(b, r, sigma2);
  // Mean-term weight m_k = |d mu_k/d|A||^2 / var_k = G^2 b_k^r |s_k|^2 / var_k.
  const ArrayXd w = gain * gain * b.pow(r) * pilot.symbols.abs2() / var;
  const ArrayXd half_log_b = 0.5 * b.log();  // ln sqrt(b_k)
  const ArrayXd& psi = unit.phase;
  const ArrayXd& f = grid.freqs;
  const double a = theta.amplitude;

  // Covariance term of the (r, r) entry: (C^{-1} dC/dr)_kk = b^{r+1} ln b / (b^{r+1} - 1),
  // evaluated through expm1 to stay accurate for b near 1.
  const ArrayXd log_b = b.log();
  const ArrayXd cov_ratio =
      log_b / (-((-(r + 1.0) * log_b).unaryExpr([](double x) { return std::expm1(x); })));
  const double trace_term = cov_ratio.square().sum();

  FisherMatrix fim;
  fim.regime = NoiseRegime::selective;
  Eigen::Matrix4d& m = fim.entries;
  m(0, 0) = 2.0 * w.sum();
  m(0, 1) = 0.0;
  m(0, 2) = 0.0;
  m(0, 3) = 2.0 * a * (w * half_log_b).sum();
  m(1, 1) = 2.0 * a * a * w.sum();
  m(1, 2) = -4.0 * kPi * a * a * (w * f).sum();
  m(1, 3) = 2.0 * a * a * (w * psi).sum();
  m(2, 2) = 8.0 * kPi * kPi * a * a * (w * f.square()).sum();
  m(2, 3) = -4.0 * kPi * a * a * (w * f * psi).sum();
  m(3, 3) = trace_term + 2.0 * a * a * (w * (half_log_b.square() + psi.square())).sum();
  mirror_lower(m);
  return fim;
}

CrlbResult crlb_from_fim(const FisherMatrix& fim) {
  if (!fim.entries.allFinite()) throw std::invalid_argument("crlb_from_fim: non-finite FIM entries");

  // The parameters live on wildly different scales (tau in seconds against
  // 1e11 Hz frequencies), which alone drives the raw condition number past
  // 1e20. Equilibrate to unit diagonal first; the scaled condition number
  // measures the genuine phi-tau-r coupling rather than the units.
  Eigen::Vector4d scale;
  for (int i = 0; i < 4; ++i)
    scale(i) = fim.entries(i, i) > 0.0 ? 1.0 / std::sqrt(fim.entries(i, i)) : 1.0;
  const Eigen::Matrix4d balanced = scale.asDiagonal() * fim.entries * scale.asDiagonal();

  Eigen::SelfAdjointEigenSolver<Eigen::Matrix4d> eig(balanced);
  const Eigen::Vector4d ev = eig.eigenvalues();  // ascending
  const double ev_max = ev(3);
  const double ev_min = ev(0);

  CrlbResult out;
  out.condition_number =
      ev_min > 0.0 ? ev_max / ev_min : std::numeric_limits<double>::infinity();
  out.pseudo_inverse_used = !(out.condition_number <= kCondThreshold);

  Eigen::Matrix4d inv_balanced;
  if (!out.pseudo_inverse_used) {
    inv_balanced = balanced.inverse();
  } else {
    Eigen::Vector4d inv_ev = Eigen::Vector4d::Zero();
    const double cutoff = ev_max / kCondThreshold;
    for (int i = 0; i < 4; ++i)
      if (ev(i) > cutoff) inv_ev(i) = 1.0 / ev(i);
    inv_balanced = eig.eigenvectors() * inv_ev.asDiagonal() * eig.eigenvectors().transpose();
  }
  const Eigen::Matrix4d inv = scale.asDiagonal() * inv_balanced * scale.asDiagonal();
  out.variances = inv.diagonal().array();
  return out;
}

}  // namespace rof
