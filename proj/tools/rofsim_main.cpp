#include <CLI11.hpp>
#include <cstdio>
#include <exception>
#include <string>

#include "rof/io.hpp"
#include "rof/log.hpp"
#include "rof/monte_carlo.hpp"
#include "rof/positioning.hpp"
#include "rof/scenario.hpp"

namespace {

using namespace rof;

struct CommonOpts {
  std::string scenario_path;
  std::string out_path;
  std::uint64_t seed = 0;
  bool seed_set = false;
  int workers = -1;
  std::string sweep_axis;
};

Scenario load_with_overrides(const CommonOpts& opts) {
  Scenario s = load_scenario(opts.scenario_path);
  if (opts.seed_set) s.master_seed = opts.seed;
  if (opts.workers >= 0) s.workers = opts.workers;
  if (!opts.sweep_axis.empty()) {
    if (opts.sweep_axis == "sigma2")
      s.sweep_axis = SweepAxis::sigma2;
    else if (opts.sweep_axis == "amplitude")
      s.sweep_axis = SweepAxis::amplitude;
    else if (opts.sweep_axis == "bandwidth")
      s.sweep_axis = SweepAxis::bandwidth;
    else
      throw std::invalid_argument("--sweep: expected sigma2|amplitude|bandwidth");
  }
  return s;
}

void add_common(CLI::App* cmd, CommonOpts& opts, bool with_sweep) {
  cmd->add_option("--scenario", opts.scenario_path, "scenario file")->required();
  cmd->add_option("--out", opts.out_path, "output CSV path")->required();
  cmd->add_option("--seed", opts.seed, "master seed override")
      ->each([&opts](const std::string&) { opts.seed_set = true; });
  cmd->add_option("--workers", opts.workers, "worker thread count (0 = hardware)");
  if (with_sweep) cmd->add_option("--sweep", opts.sweep_axis, "sweep axis override");
}

std::string trials_path_for(const std::string& out_path) {
  const size_t dot = out_path.find_last_of('.');
  const size_t slash = out_path.find_last_of("/\\");
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash))
    return out_path + "_trials.csv";
  return out_path.substr(0, dot) + "_trials" + out_path.substr(dot);
}

int run_position(const Scenario& s, const std::string& trajectory_path,
                 const std::string& out_path) {
  if (!s.positioning)
    throw std::invalid_argument("position: scenario has no [positioning] section");
  if (s.estimator == EstimatorKind::nls_pso)
    throw std::invalid_argument("position: estimator must be ml_flat or ml_selective");

  const ScenarioInstance inst = instantiate(s, s.sweep_values.front());
  if (s.sweep_values.size() > 1)
    log_info("position: using the first sweep value only");

  TrajectoryConfig cfg;
  cfg.geom = s.positioning->geom;
  cfg.grid = inst.grid;
  cfg.fiber = inst.fiber;
  cfg.pilot = inst.pilot;
  cfg.pa_gain = s.pa_gain;
  cfg.sigma2 = inst.chain.noise_var;
  cfg.amplitude = s.amplitude;
  cfg.pathloss = s.pathloss;
  cfg.regime =
      s.estimator == EstimatorKind::ml_flat ? NoiseRegime::flat : NoiseRegime::selective;
  cfg.clock_offset_min = s.positioning->clock_offset_min;
  cfg.clock_offset_max = s.positioning->clock_offset_max;
  cfg.tau_step = s.search.tau_step;  // 0 picks 1/(8 B)
  cfg.region_halfwidth = s.positioning->region_halfwidth;
  cfg.trials = int(s.positioning->trials_per_point);
  cfg.seed = s.master_seed;
  cfg.workers = s.workers > 0 ? s.workers : 2;

  const std::vector<UePosition> trajectory =
      read_trajectory(trajectory_path, -cfg.geom.ue_height_below_ceiling);
  const TrajectoryResult res = trajectory_experiment(trajectory, cfg);

  char hash[32];
  std::snprintf(hash, sizeof hash, "%016llx", (unsigned long long)s.hash());
  std::string body = "# rof position output\n# scenario_hash=" + std::string(hash) +
                     "\n# master_seed=" + std::to_string(s.master_seed) + "\n";
  body += "px_true,py_true,px_hat,py_hat,err_m\n";
  for (const TrajectoryRow& row : res.rows) {
    body += format_double(row.px_true) + "," + format_double(row.py_true) + "," +
            format_double(row.px_hat) + "," + format_double(row.py_hat) + "," +
            format_double(row.err_m) + "\n";
  }
  write_file_atomic(out_path, body);
  std::fprintf(stderr, "position RMSE: %.6g m over %zu rows\n", res.rmse, res.rows.size());
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cascaded radio-over-fiber uplink simulator and estimator"};
  app.require_subcommand(1);

  CommonOpts sim_opts, est_opts, crlb_opts, pos_opts;
  bool dump_trials = false;
  long estimate_trials = 1;
  std::string trajectory_path;
  std::string ingest_in, ingest_out;
  int smooth_window = 0;

  CLI::App* sim = app.add_subcommand("simulate", "Monte Carlo sweep: RMSE/error-rate table");
  add_common(sim, sim_opts, true);
  sim->add_flag("--dump-trials", dump_trials, "also write per-trial rows");

  CLI::App* est = app.add_subcommand("estimate", "run a few trials, write per-trial estimates");
  add_common(est, est_opts, true);
  est->add_option("--trials", estimate_trials, "trial count override (default 1)");

  CLI::App* crlb = app.add_subcommand("crlb", "CRLB sweep table");
  add_common(crlb, crlb_opts, true);

  CLI::App* pos = app.add_subcommand("position", "trajectory positioning experiment");
  add_common(pos, pos_opts, false);
  pos->add_option("--trajectory", trajectory_path, "trajectory CSV (px_m,py_m)")->required();

  CLI::App* ingest =
      app.add_subcommand("ingest-channel", "smooth a measurement and export it with phase");
  ingest->add_option("--in", ingest_in, "measurement CSV")->required();
  ingest->add_option("--out", ingest_out, "channel CSV output")->required();
  ingest->add_option("--smooth-window", smooth_window, "median window (0 = none)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (sim->parsed()) {
      const Scenario s = load_with_overrides(sim_opts);
      const RunResult res = run_monte_carlo(s);
      write_file_atomic(sim_opts.out_path, render_simulate_csv(s, res));
      if (dump_trials)
        write_file_atomic(trials_path_for(sim_opts.out_path), render_trials_csv(s, res));
      std::fprintf(stderr, "simulate: %zu sweep points, %.3f s\n", res.points.size(),
                   res.wall_seconds);
    } else if (est->parsed()) {
      Scenario s = load_with_overrides(est_opts);
      if (estimate_trials >= 1) s.trials = estimate_trials;
      const RunResult res = run_monte_carlo(s);
      write_file_atomic(est_opts.out_path, render_trials_csv(s, res));
      std::fprintf(stderr, "estimate: %zu rows, %.3f s\n", res.trials.size(), res.wall_seconds);
    } else if (crlb->parsed()) {
      const Scenario s = load_with_overrides(crlb_opts);
      write_file_atomic(crlb_opts.out_path, render_crlb_csv(s));
    } else if (pos->parsed()) {
      const Scenario s = load_with_overrides(pos_opts);
      return run_position(s, trajectory_path, pos_opts.out_path);
    } else if (ingest->parsed()) {
      RawMeasurement meas = read_measurement(ingest_in);
      if (smooth_window > 0) {
        meas.magnitude_db = median_smooth(meas.magnitude_db, smooth_window);
        meas.group_delay = median_smooth(meas.group_delay, smooth_window);
      }
      const ArrayXd phase = phase_from_group_delay(meas.freqs, meas.group_delay);
      write_channel(ingest_out, meas.freqs, meas.magnitude_db, meas.group_delay, phase);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
