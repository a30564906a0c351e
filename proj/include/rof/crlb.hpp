#pragma once

#include <array>

#include "rof/common.hpp"
#include "rof/fiber.hpp"
#include "rof/grid.hpp"
#include "rof/signal.hpp"

namespace rof {

/// Parameter point theta = [|A|, phi, tau, r] for the linear-regime bounds.
struct ThetaParams {
  double amplitude = 1.0;  // |A|
  double phase = 0.0;      // phi, radians
  double tau = 0.0;        // seconds
  double stages = 0.0;     // r, continuous
};

/// 4x4 Fisher information matrix over [|A|, phi, tau, r].
struct FisherMatrix {
  Eigen::Matrix4d entries = Eigen::Matrix4d::Zero();
  NoiseRegime regime = NoiseRegime::flat;
};

/// Per-parameter variance lower bounds (diagonal of the FIM inverse) with
/// conditioning metadata.
struct CrlbResult {
  Eigen::Array4d variances = Eigen::Array4d::Zero();
  double condition_number = 0.0;
  bool pseudo_inverse_used = false;
};

/// Mean of the received spectrum:
/// mu_k = G^{r+1} |A| |H_k|^r s_k e^{j(phi + r psi_k - 2 pi f_k tau)}.
ArrayXcd mean_vector(const ThetaParams& theta, const PilotSequence& pilot,
                     const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid);

/// First-order derivatives of the mean w.r.t. [|A|, phi, tau, r]. The flat
/// regime drops the ln sqrt(b_k) factor from d mu / d r (it is zero when
/// b_k = 1); the selective regime keeps (ln sqrt(b_k) + j psi_k).
std::array<ArrayXcd, 4> mu_derivatives(const ThetaParams& theta, const PilotSequence& pilot,
                                       const UnitFiberResponse& unit, double gain,
                                       const FrequencyGrid& grid, NoiseRegime regime);

/// Closed-form FIM for the flat regime (b_k = 1): covariance (r+1) sigma^2 I,
/// all |A| couplings zero, K/(r+1)^2 covariance term in the (r, r) entry.
FisherMatrix fim_flat(const ThetaParams& theta, const PilotSequence& pilot,
                      const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid,
                      double sigma2);

/// Closed-form FIM for the selective regime. Requires |b_k - 1| > 1e-9 for
/// every bin; use fim_flat otherwise. The (r, r) entry carries the
/// covariance term sum_k (b_k^{r+1} ln b_k / (b_k^{r+1} - 1))^2 plus the
/// ((ln sqrt b_k)^2 + psi_k^2)-weighted mean term, and the |A|-r coupling is
/// nonzero.
FisherMatrix fim_selective(const ThetaParams& theta, const PilotSequence& pilot,
                           const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid,
                           double sigma2);

/// Inverts the FIM; switches to the Moore-Penrose pseudo-inverse and flags it
/// when the condition number exceeds 1e12.
CrlbResult crlb_from_fim(const FisherMatrix& fim);

}  // namespace rof
