#pragma once

#include <string>
#include <vector>

#include "rof/crlb.hpp"
#include "rof/scenario.hpp"

namespace rof {

struct TrialRecord {
  Index sweep_index = 0;
  double sweep_value = 0.0;
  long trial = 0;
  bool failed = false;
  double tau_true = 0.0, r_true = 0.0, amp_true = 0.0, phase_true = 0.0;
  double tau_hat = 0.0, r_hat = 0.0, amp_hat = 0.0, phase_hat = 0.0;
  int r_hat_rounded = 0;
  double objective = 0.0;
};

struct SweepPointResult {
  double sweep_value = 0.0;
  long trials = 0;
  long failures = 0;
  double rmse_tau = 0.0, rmse_r = 0.0, rmse_amp = 0.0, rmse_phase = 0.0;
  double err_rate_r = 0.0;  // P(r_hat_rounded != r)
  bool has_crlb = false;
  Eigen::Array4d crlb_var = Eigen::Array4d::Zero();
  double crlb_cond = 0.0;
  double wall_seconds = 0.0;  // never written to CSV
};

struct RunResult {
  std::vector<SweepPointResult> points;
  std::vector<TrialRecord> trials;  // always filled; dumping is an output choice
  double wall_seconds = 0.0;
};

/// Runs `trials` simulate->estimate cycles per sweep point. Per-trial RNG
/// streams derive from (master seed, sweep index, trial index); draws per
/// trial happen in the order phase, tau jitter, then propagation noise.
/// Estimator failures are counted per point and rethrown only when they
/// exceed 10% of the point's trials.
RunResult run_monte_carlo(const Scenario& scenario);

std::string render_simulate_csv(const Scenario& scenario, const RunResult& result);
std::string render_trials_csv(const Scenario& scenario, const RunResult& result);

/// CRLB sweep table: one row per (sweep value, applicable regime).
std::string render_crlb_csv(const Scenario& scenario);

}  // namespace rof
