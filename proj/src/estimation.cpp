#include "rof/estimation.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rof {

void SearchGrid2D::validate() const {
  if (!(r_min < r_max) || !(tau_min < tau_max))
    throw std::invalid_argument("SearchGrid2D: min must be below max");
  if (!(r_step > 0.0) || !(tau_step > 0.0))
    throw std::invalid_argument("SearchGrid2D: steps must be positive");
  if (r_count() < 2 || tau_count() < 2)
    throw std::invalid_argument("SearchGrid2D: need at least 2 points per axis");
}

Index SearchGrid2D::r_count() const {
  return Index(std::floor((r_max - r_min) / r_step + 1e-9)) + 1;
}

Index SearchGrid2D::tau_count() const {
  return Index(std::floor((tau_max - tau_min) / tau_step + 1e-9)) + 1;
}

void PsoConfig::validate() const {
  if (iterations < 1 || particles < 1)
    throw std::invalid_argument("PsoConfig: iterations and particles must be >= 1");
  for (int j = 0; j < 4; ++j) {
    if (!std::isfinite(lo(j)) || !std::isfinite(hi(j)))
      throw std::invalid_argument("PsoConfig: bounds must be finite");
    if (!(lo(j) < hi(j))) throw std::invalid_argument("PsoConfig: lower bound must be below upper");
  }
}

ArrayXcd g_vector(double r, double tau, const PilotSequence& pilot,
                  const UnitFiberResponse& unit, double gain, const FrequencyGrid& grid) {
  return std::pow(gain, r + 1.0) * (-kJ * 2.0 * kPi * tau * grid.freqs).exp() *
         powered_response(unit, r) * pilot.symbols;
}

cplx a_hat(const Eigen::Ref<const ArrayXcd>& y, const Eigen::Ref<const ArrayXcd>& g) {
  const double g2 = g.abs2().sum();
  if (!(g2 > 0.0)) throw std::domain_error("a_hat: degenerate model vector g");
  return (g.conjugate() * y).sum() / g2;
}

namespace {

double projector_residual(const Eigen::Ref<const ArrayXcd>& y, const Eigen::Ref<const ArrayXcd>& g) {
  const double g2 = g.abs2().sum();
  if (!(g2 > 0.0)) throw std::domain_error("ml objective: degenerate model vector g");
  const cplx gy = (g.conjugate() * y).sum();
  return (y - g * (gy / g2)).abs2().sum();
}

}  // namespace

double ml_objective_flat(const Eigen::Ref<const ArrayXcd>& y, double r, double tau,
                         const LinearModel& model) {
  if (!(model.sigma2 > 0.0)) throw std::invalid_argument("ml_objective_flat: sigma2 must be positive");
  const ArrayXcd g = g_vector(r, tau, model.pilot, model.fiber, model.gain, model.grid);
  const double nu = (r + 1.0) * model.sigma2;
  return std::log(nu * double(y.size()) * kPi) + projector_residual(y, g) / nu;
}

std::pair<ArrayXcd, ArrayXcd> prewhiten(const Eigen::Ref<const ArrayXcd>& y,
                                        const Eigen::Ref<const ArrayXcd>& g,
                                        const Eigen::Ref<const ArrayXd>& variance) {
  if ((variance <= 0.0).any()) throw std::domain_error("prewhiten: nonpositive noise variance bin");
  const ArrayXd w = variance.sqrt().inverse();
  return {y * w.cast<cplx>(), g * w.cast<cplx>()};
}

ParamEstimate ml_grid_search(const Eigen::Ref<const ArrayXcd>& y, const SearchGrid2D& search,
                             NoiseRegime regime, const LinearModel& model) {
  search.validate();
  if (!(model.sigma2 > 0.0)) throw std::invalid_argument("ml_grid_search: sigma2 must be positive");
  if (y.size() != model.grid.size())
    throw std::invalid_argument("ml_grid_search: spectrum/grid length mismatch");

  const Index k = model.grid.size();
  const Index nr = search.r_count();
  const Index nt = search.tau_count();

  // Phase lattice e^{-j 2 pi f_k tau_t}; tau dependence is shared by all r.
  Eigen::MatrixXcd phases(k, nt);
  for (Index t = 0; t < nt; ++t)
    phases.col(t) = (-kJ * 2.0 * kPi * search.tau_at(t) * model.grid.freqs).exp().matrix();

  const ArrayXd b = b_factors(model.fiber, model.gain);

  double best = std::numeric_limits<double>::infinity();
  Index best_r = 0, best_t = 0;
  for (Index ri = 0; ri < nr; ++ri) {
    const double r = search.r_at(ri);
    const ArrayXcd base =
        std::pow(model.gain, r + 1.0) * powered_response(model.fiber, r) * model.pilot.symbols;

    double log_term, base2, y2;
    ArrayXcd u;  // conj(whitened base) .* whitened y
    if (regime == NoiseRegime::flat) {
      const double nu = (r + 1.0) * model.sigma2;
      log_term = std::log(nu * double(k) * kPi);
      base2 = base.abs2().sum();
      y2 = y.abs2().sum();
      u = base.conjugate() * y / nu;
      // residual/nu = y2/nu - |g^H y|^2 / (base2 * nu); fold 1/nu into u and y2.
      y2 /= nu;
      base2 /= nu;
    } else {
      const ArrayXd var = effective_noise_variance(b, r, model.sigma2);
      if ((var <= 0.0).any()) throw std::domain_error("ml_grid_search: nonpositive variance bin");
      log_term = var.log().sum();
      const ArrayXd inv = var.inverse();
      base2 = (base.abs2() * inv).sum();
      y2 = (y.abs2() * inv).sum();
      u = base.conjugate() * y * inv.cast<cplx>();
    }
    if (!(base2 > 0.0)) throw std::domain_error("ml_grid_search: degenerate model vector g");

    // corr(t) = g~^H y~ at tau_t, a single mat-vec across the tau lattice.
    const Eigen::VectorXcd corr = phases.adjoint() * u.matrix();
    for (Index t = 0; t < nt; ++t) {
      const double objective = log_term + (y2 - std::norm(corr(t)) / base2);
      if (objective < best) {
        best = objective;
        best_r = ri;
        best_t = t;
      }
    }
  }

  ParamEstimate est;
  est.r_hat = search.r_at(best_r);
  est.tau_hat = search.tau_at(best_t);
  est.r_hat_rounded = int(std::lround(est.r_hat));
  est.objective = best;
  est.evaluations = long(nr) * long(nt);

  const ArrayXcd g =
      g_vector(est.r_hat, est.tau_hat, model.pilot, model.fiber, model.gain, model.grid);
  if (regime == NoiseRegime::flat) {
    est.a_hat = a_hat(y, g);
  } else {
    const ArrayXd var = effective_noise_variance(b, est.r_hat, model.sigma2);
    auto [yw, gw] = prewhiten(y, g, var);
    est.a_hat = a_hat(yw, gw);
  }
  return est;
}

double nls_objective(const Eigen::Array4d& theta, const Eigen::Ref<const ArrayXcd>& y_time,
                     const NlsModel& model) {
  const int r = std::max(0, int(std::lround(theta(3))));
  WirelessLink link;
  link.amplitude = theta(0);
  link.phase = theta(1);
  link.tau = theta(2);

  // The cubic PA makes strongly overdriven cascades grow triple-exponentially
  // in r; where that overflows doubles, the exact cost is astronomically
  // large, so saturate instead of surfacing inf to the optimizer.
  constexpr double kOverflowPenalty = 1e30;

  const ArrayXcd x = wireless_input(link, model.pilot, model.grid);
  ArrayXcd m = pa_apply(time_domain_input(x, model.grid, model.chain.oversample), model.chain.pa);
  for (int stage = 0; stage < r; ++stage) {
    if (!m.allFinite() || (m.abs2().maxCoeff() > 1e100)) return kOverflowPenalty;
    m = stage_function(m, model.chain);
  }
  if (!m.allFinite()) return kOverflowPenalty;

  const Index overlap = std::min(y_time.size(), m.size());
  double cost = (y_time.head(overlap) - m.head(overlap)).abs2().sum();
  if (y_time.size() > overlap) cost += y_time.tail(y_time.size() - overlap).abs2().sum();
  if (m.size() > overlap) cost += m.tail(m.size() - overlap).abs2().sum();
  return std::isfinite(cost) ? cost : kOverflowPenalty;
}

ParamEstimate pso_optimize(const std::function<double(const Eigen::Array4d&)>& objective,
                           const PsoConfig& config) {
  config.validate();
  Rng rng(config.seed);
  const int p = config.particles;

  using ParticleMatrix = Eigen::Matrix<double, Eigen::Dynamic, 4>;
  ParticleMatrix theta(p, 4), velocity = ParticleMatrix::Zero(p, 4);
  Eigen::VectorXd cost(p);
  long evaluations = 0;

  auto evaluate = [&](int i) {
    const Eigen::Array4d t = theta.row(i).transpose().array();
    const double c = objective(t);
    ++evaluations;
    if (!std::isfinite(c)) {
      std::ostringstream msg;
      msg << "pso_optimize: non-finite objective at theta = [" << t(0) << ", " << t(1) << ", "
          << t(2) << ", " << t(3) << "]";
      throw std::runtime_error(msg.str());
    }
    return c;
  };

  for (int i = 0; i < p; ++i)
    for (int j = 0; j < 4; ++j)
      theta(i, j) = uniform_in(rng, config.lo(j), config.hi(j));

  double c_gbest = std::numeric_limits<double>::infinity();
  Eigen::RowVector4d theta_gbest = theta.row(0);
  for (int i = 0; i < p; ++i) {
    cost(i) = evaluate(i);
    if (cost(i) < c_gbest) {
      c_gbest = cost(i);
      theta_gbest = theta.row(i);
    }
  }

  ParticleMatrix theta_pbest = theta;
  Eigen::VectorXd c_pbest = cost;

  double w_ine = config.inertia;
  for (int iter = 0; iter < config.iterations; ++iter) {
    ParticleMatrix r1(p, 4), r2(p, 4);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < 4; ++j) r1(i, j) = uniform01(rng);
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < 4; ++j) r2(i, j) = uniform01(rng);

    velocity = w_ine * velocity +
               config.w_personal * r1.cwiseProduct(theta_pbest - theta) +
               config.w_global * r2.cwiseProduct(theta_gbest.replicate(p, 1) - theta);
    theta += velocity;
    for (int i = 0; i < p; ++i)
      for (int j = 0; j < 4; ++j)
        theta(i, j) = std::min(std::max(theta(i, j), config.lo(j)), config.hi(j));

    for (int i = 0; i < p; ++i) {
      const double c = evaluate(i);
      if (c < c_pbest(i)) {
        c_pbest(i) = c;
        theta_pbest.row(i) = theta.row(i);
      }
      if (c < c_gbest) {
        c_gbest = c;
        theta_gbest = theta.row(i);
      }
    }
    w_ine *= config.inertia_decay;
  }

  ParamEstimate est;
  est.a_hat = std::polar(theta_gbest(0), theta_gbest(1));
  est.tau_hat = theta_gbest(2);
  est.r_hat = theta_gbest(3);
  est.r_hat_rounded = int(std::lround(est.r_hat));
  est.objective = c_gbest;
  est.evaluations = evaluations;
  return est;
}

ParamEstimate estimate_nonlinear(const Eigen::Ref<const ArrayXcd>& y_time, const PsoConfig& config,
                                 const NlsModel& model) {
  // Eigen::Ref is not copy-capturable; materialize the observed block once.
  const ArrayXcd y = y_time;
  return pso_optimize(
      [&y, &model](const Eigen::Array4d& theta) { return nls_objective(theta, y, model); }, config);
}

}  // namespace rof
