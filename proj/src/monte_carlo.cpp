#include "rof/monte_carlo.hpp"

#include <chrono>
#include <cmath>
#include <stdexcept>
#include <thread>

#include "rof/io.hpp"
#include "rof/log.hpp"
#include "rof/parallel.hpp"

namespace rof {

namespace {

constexpr std::uint64_t kPsoSeedSalt = 0x50534F5345454453ULL;

SearchGrid2D resolve_search(const Scenario& s, const FrequencyGrid& grid) {
  SearchGrid2D g = s.search;
  if (g.tau_step == 0.0) g.tau_step = 1.0 / (8.0 * grid.bandwidth());
  g.validate();
  return g;
}

PsoConfig resolve_pso(const Scenario& s) {
  PsoConfig cfg;
  cfg.iterations = s.pso.iterations;
  cfg.particles = s.pso.particles;
  cfg.w_personal = s.pso.w_personal;
  cfg.w_global = s.pso.w_global;
  cfg.inertia = s.pso.inertia;
  cfg.inertia_decay = s.pso.inertia_decay;
  cfg.lo << s.pso.amp_min, -kPi, s.pso.tau_min, s.pso.r_min;
  cfg.hi << s.pso.amp_max, kPi, s.pso.tau_max, s.pso.r_max;
  return cfg;
}

int effective_workers(const Scenario& s) {
  if (s.workers > 0) return s.workers;
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : int(hw);
}

}  // namespace

RunResult run_monte_carlo(const Scenario& scenario) {
  scenario.validate();
  const auto t_start = std::chrono::steady_clock::now();

  RunResult result;
  const Index n_sweep = Index(scenario.sweep_values.size());
  result.points.resize(size_t(n_sweep));
  result.trials.resize(size_t(n_sweep) * size_t(scenario.trials));
  const int workers = effective_workers(scenario);

  for (Index si = 0; si < n_sweep; ++si) {
    const auto t_point = std::chrono::steady_clock::now();
    const double value = scenario.sweep_values[size_t(si)];
    const ScenarioInstance inst = instantiate(scenario, value);
    const double amp_true =
        scenario.sweep_axis == SweepAxis::amplitude ? value : scenario.amplitude;

    SearchGrid2D search;
    PsoConfig pso;
    NlsModel nls;
    if (scenario.estimator == EstimatorKind::nls_pso) {
      pso = resolve_pso(scenario);
      nls.grid = inst.grid;
      nls.pilot = inst.pilot;
      nls.chain = inst.chain;
    } else {
      search = resolve_search(scenario, inst.grid);
    }
    const NoiseRegime regime =
        scenario.estimator == EstimatorKind::ml_flat ? NoiseRegime::flat : NoiseRegime::selective;

    parallel_for(size_t(scenario.trials), size_t(workers), [&](size_t trial) {
      TrialRecord& rec = result.trials[size_t(si) * size_t(scenario.trials) + trial];
      rec.sweep_index = si;
      rec.sweep_value = value;
      rec.trial = long(trial);

      Rng rng = make_stream(scenario.master_seed, std::uint64_t(si), trial);
      const double phase =
          scenario.random_phase ? uniform_in(rng, -kPi, kPi) : scenario.phase;
      const double tau =
          scenario.tau + (scenario.tau_jitter > 0.0 ? uniform01(rng) * scenario.tau_jitter : 0.0);
      rec.tau_true = tau;
      rec.r_true = scenario.stages;
      rec.amp_true = amp_true;
      rec.phase_true = phase;

      WirelessLink link;
      link.amplitude = amp_true;
      link.phase = phase;
      link.tau = tau;

      try {
        ParamEstimate est;
        const ArrayXcd x = wireless_input(link, inst.pilot, inst.grid);
        if (scenario.estimator == EstimatorKind::nls_pso) {
          const ArrayXcd xt = time_domain_input(x, inst.grid, inst.chain.oversample);
          const ArrayXcd yt = propagate_nonlinear(xt, inst.chain, rng);
          PsoConfig cfg = pso;
          cfg.seed = derive_stream_seed(scenario.master_seed ^ kPsoSeedSalt, std::uint64_t(si), trial);
          est = estimate_nonlinear(yt, cfg, nls);
        } else {
          const ArrayXcd y = propagate_linear(x, inst.chain, rng);
          est = ml_grid_search(y, search, regime, inst.model);
        }
        rec.tau_hat = est.tau_hat;
        rec.r_hat = est.r_hat;
        rec.r_hat_rounded = est.r_hat_rounded;
        rec.amp_hat = std::abs(est.a_hat);
        rec.phase_hat = std::arg(est.a_hat);
        rec.objective = est.objective;
      } catch (const std::exception& e) {
        rec.failed = true;
        log_debug(std::string("trial failed: ") + e.what());
      }
    });

    SweepPointResult& point = result.points[size_t(si)];
    point.sweep_value = value;
    point.trials = scenario.trials;
    double s_tau = 0.0, s_r = 0.0, s_amp = 0.0, s_phase = 0.0;
    long wrong_r = 0, ok = 0;
    for (long t = 0; t < scenario.trials; ++t) {
      const TrialRecord& rec = result.trials[size_t(si) * size_t(scenario.trials) + size_t(t)];
      if (rec.failed) {
        ++point.failures;
        continue;
      }
      ++ok;
      s_tau += (rec.tau_hat - rec.tau_true) * (rec.tau_hat - rec.tau_true);
      s_r += (rec.r_hat - rec.r_true) * (rec.r_hat - rec.r_true);
      s_amp += (rec.amp_hat - rec.amp_true) * (rec.amp_hat - rec.amp_true);
      const double dp = wrap_angle(rec.phase_hat - rec.phase_true);
      s_phase += dp * dp;
      if (rec.r_hat_rounded != int(std::lround(rec.r_true))) ++wrong_r;
    }
    if (point.failures * 10 > scenario.trials)
      throw std::runtime_error("run_monte_carlo: more than 10% of trials failed at sweep value " +
                               format_double(value));
    if (ok > 0) {
      point.rmse_tau = std::sqrt(s_tau / double(ok));
      point.rmse_r = std::sqrt(s_r / double(ok));
      point.rmse_amp = std::sqrt(s_amp / double(ok));
      point.rmse_phase = std::sqrt(s_phase / double(ok));
      point.err_rate_r = double(wrong_r) / double(ok);
    }

    if (scenario.estimator != EstimatorKind::nls_pso) {
      ThetaParams theta{amp_true, 0.0, scenario.tau, scenario.stages};
      try {
        const FisherMatrix fim =
            scenario.estimator == EstimatorKind::ml_flat
                ? fim_flat(theta, inst.pilot, inst.fiber, scenario.pa_gain, inst.grid,
                           inst.chain.noise_var)
                : fim_selective(theta, inst.pilot, inst.fiber, scenario.pa_gain, inst.grid,
                                inst.chain.noise_var);
        const CrlbResult crlb = crlb_from_fim(fim);
        point.has_crlb = true;
        point.crlb_var = crlb.variances;
        point.crlb_cond = crlb.condition_number;
      } catch (const std::exception& e) {
        log_info(std::string("CRLB unavailable at this point: ") + e.what());
      }
    }

    point.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t_point).count();
    log_info("sweep " + format_double(value) + ": rmse_tau=" + format_double(point.rmse_tau) +
             " err_rate_r=" + format_double(point.err_rate_r) + " (" +
             format_double(point.wall_seconds) + " s)");
  }

  result.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return result;
}

namespace {

std::string csv_header(const Scenario& scenario, const char* subcommand) {
  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", (unsigned long long)scenario.hash());
  std::string out;
  out += std::string("# rof ") + subcommand + " output\n";
  out += std::string("# scenario_hash=") + hash + "\n";
  out += "# master_seed=" + std::to_string(scenario.master_seed) + "\n";
  out += std::string("# sweep_axis=") + to_string(scenario.sweep_axis) + "\n";
  return out;
}

}  // namespace

std::string render_simulate_csv(const Scenario& scenario, const RunResult& result) {
  std::string out = csv_header(scenario, "simulate");
  out +=
      "sweep_value,trials,failures,rmse_tau_s,rmse_r,rmse_amp,rmse_phase_rad,err_rate_r,"
      "crlb_var_amp,crlb_var_phase,crlb_var_tau,crlb_var_r,crlb_cond\n";
  for (const SweepPointResult& p : result.points) {
    out += format_double(p.sweep_value) + "," + std::to_string(p.trials) + "," +
           std::to_string(p.failures) + "," + format_double(p.rmse_tau) + "," +
           format_double(p.rmse_r) + "," + format_double(p.rmse_amp) + "," +
           format_double(p.rmse_phase) + "," + format_double(p.err_rate_r);
    if (p.has_crlb) {
      for (int i = 0; i < 4; ++i) out += "," + format_double(p.crlb_var(i));
      out += "," + format_double(p.crlb_cond);
    } else {
      out += ",,,,,";
    }
    out += "\n";
  }
  return out;
}

std::string render_trials_csv(const Scenario& scenario, const RunResult& result) {
  std::string out = csv_header(scenario, "trials");
  out +=
      "sweep_index,sweep_value,trial,failed,tau_true_s,r_true,amp_true,phase_true_rad,"
      "tau_hat_s,r_hat,r_hat_rounded,amp_hat,phase_hat_rad,objective\n";
  for (const TrialRecord& t : result.trials) {
    out += std::to_string(t.sweep_index) + "," + format_double(t.sweep_value) + "," +
           std::to_string(t.trial) + "," + (t.failed ? "1" : "0") + "," +
           format_double(t.tau_true) + "," + format_double(t.r_true) + "," +
           format_double(t.amp_true) + "," + format_double(t.phase_true) + "," +
           format_double(t.tau_hat) + "," + format_double(t.r_hat) + "," +
           std::to_string(t.r_hat_rounded) + "," + format_double(t.amp_hat) + "," +
           format_double(t.phase_hat) + "," + format_double(t.objective) + "\n";
  }
  return out;
}

std::string render_crlb_csv(const Scenario& scenario) {
  scenario.validate();
  std::string out = csv_header(scenario, "crlb");
  out += "sweep_value,regime,crlb_var_amp,crlb_var_phase,crlb_var_tau,crlb_var_r,crlb_cond,"
         "pseudo_inverse\n";
  for (double value : scenario.sweep_values) {
    const ScenarioInstance inst = instantiate(scenario, value);
    const double amp_true =
        scenario.sweep_axis == SweepAxis::amplitude ? value : scenario.amplitude;
    const ThetaParams theta{amp_true, 0.0, scenario.tau, scenario.stages};
    const ArrayXd b = b_factors(inst.fiber, scenario.pa_gain);

    const bool flat_ok = ((b - 1.0).abs() <= 1e-9).all();
    const bool selective_ok = ((b - 1.0).abs() > 1e-9).all();
    for (int regime = 0; regime < 2; ++regime) {
      if (regime == 0 && !flat_ok) continue;
      if (regime == 1 && !selective_ok) continue;
      const FisherMatrix fim =
          regime == 0 ? fim_flat(theta, inst.pilot, inst.fiber, scenario.pa_gain, inst.grid,
                                 inst.chain.noise_var)
                      : fim_selective(theta, inst.pilot, inst.fiber, scenario.pa_gain, inst.grid,
                                      inst.chain.noise_var);
      const CrlbResult crlb = crlb_from_fim(fim);
      out += format_double(value) + "," + (regime == 0 ? "flat" : "selective");
      for (int i = 0; i < 4; ++i) out += "," + format_double(crlb.variances(i));
      out += "," + format_double(crlb.condition_number) + "," +
             (crlb.pseudo_inverse_used ? "1" : "0") + "\n";
    }
  }
  return out;
}

}  // namespace rof
