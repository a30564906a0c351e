#pragma once

#include <functional>

#include "rof/common.hpp"
#include "rof/fiber.hpp"
#include "rof/grid.hpp"
#include "rof/rng.hpp"
#include "rof/signal.hpp"

namespace rof {

/// Rectangular (r, tau) search lattice for the ML grid search.
struct SearchGrid2D {
  double r_min = 0.0, r_max = 1.0, r_step = 1.0;
  double tau_min = 0.0, tau_max = 1.0, tau_step = 1.0;

  void validate() const;
  Index r_count() const;
  Index tau_count() const;
  double r_at(Index i) const { return r_min + double(i) * r_step; }
  double tau_at(Index i) const { return tau_min + double(i) * tau_step; }
};

/// Particle-swarm settings; bounds are ordered [|A|, phi, tau, r].
struct PsoConfig {
  int iterations = 100;
  int particles = 1000;
  double w_personal = 1.0;
  double w_global = 0.7;
  double inertia = 0.3;
  double inertia_decay = 0.7;
  Eigen::Array4d lo = Eigen::Array4d::Zero();
  Eigen::Array4d hi = Eigen::Array4d::Ones();
  std::uint64_t seed = 1;

  void validate() const;
};

struct ParamEstimate {
  cplx a_hat{0.0, 0.0};
  double tau_hat = 0.0;
  double r_hat = 0.0;
  int r_hat_rounded = 0;
  double objective = 0.0;
  long evaluations = 0;
};

/// Model inputs shared by the frequency-domain (linear-regime) estimators.
struct LinearModel {
  FrequencyGrid grid;
  UnitFiberResponse fiber;
  PilotSequence pilot;
  double gain = 1.0;    // G, linear
  double sigma2 = 1.0;  // per-stage noise variance
};

/// g_k = G^{r+1} e^{-j 2 pi f_k tau} H_k^r s_k.
ArrayXcd g_vector(double r, double tau, const PilotSequence& pilot,
                  const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid);

/// Least-squares amplitude estimate A = g^H y / ||g||^2.
cplx a_hat(const Eigen::Ref<const ArrayXcd>& y, const Eigen::Ref<const ArrayXcd>& g);

/// Flat-regime concentrated objective
/// ln((r+1) K pi sigma^2) + ||y - P_g y||^2 / ((r+1) sigma^2).
double ml_objective_flat(const Eigen::Ref<const ArrayXcd>& y, double r, double tau,
                         const LinearModel& model);

/// Divides each bin by the square root of its effective noise variance.
std::pair<ArrayXcd, ArrayXcd> prewhiten(const Eigen::Ref<const ArrayXcd>& y,
                                        const Eigen::Ref<const ArrayXcd>& g,
                                        const Eigen::Ref<const ArrayXd>& variance);

/// Exhaustive search over the (r, tau) lattice. The selective regime
/// prewhitens with the r-dependent covariance and scores
/// ln det Sigma(r) + ||y~ - P_g~ y~||^2; ties break toward smaller r, then
/// smaller tau.
ParamEstimate ml_grid_search(const Eigen::Ref<const ArrayXcd>& y, const SearchGrid2D& search,
                             NoiseRegime regime, const LinearModel& model);

/// Model inputs for the time-domain NLS path.
struct NlsModel {
  FrequencyGrid grid;
  PilotSequence pilot;
  ChainParams chain;  // stages field is ignored; r comes from theta
};

/// ||y - f^round(r)(pa(x_time(theta)))||^2 with theta = [|A|, phi, tau, r],
/// compared on the observed block length.
double nls_objective(const Eigen::Array4d& theta, const Eigen::Ref<const ArrayXcd>& y_time,
                     const NlsModel& model);

/// Bounded particle swarm: uniform initialization, velocity update with
/// per-particle per-dimension uniform weights, position clamping, and
/// geometrically decaying inertia. All random numbers for an iteration are
/// drawn before any cost evaluation, in a fixed documented order
/// (initialization: particle-major; updates: personal matrix then global
/// matrix, each particle-major). Deterministic given config.seed.
ParamEstimate pso_optimize(const std::function<double(const Eigen::Array4d&)>& objective,
                           const PsoConfig& config);

/// NLS estimate through the PSO, for the (non)linear time-domain regime.
ParamEstimate estimate_nonlinear(const Eigen::Ref<const ArrayXcd>& y_time, const PsoConfig& config,
                                 const NlsModel& model);

}  // namespace rof
