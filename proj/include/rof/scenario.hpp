#pragma once

#include <optional>
#include <string>

#include "rof/config.hpp"
#include "rof/estimation.hpp"
#include "rof/fiber.hpp"
#include "rof/positioning.hpp"
#include "rof/signal.hpp"

namespace rof {

enum class EstimatorKind { ml_flat, ml_selective, nls_pso };
enum class SweepAxis { sigma2, amplitude, bandwidth };

struct FiberSource {
  enum class Kind { synthetic, measurement } kind = Kind::synthetic;
  SyntheticFiberSpec synth;
  std::string path;       // measurement only
  int smooth_window = 0;  // 0 = no smoothing
};

/// PSO bound configuration ([|A|, tau, r]; phi is always [-pi, pi)).
struct PsoScenario {
  int iterations = 100;
  int particles = 1000;
  double w_personal = 1.0;
  double w_global = 0.7;
  double inertia = 0.3;
  double inertia_decay = 0.7;
  double amp_min = 0.0, amp_max = 1.0;
  double tau_min = 0.0, tau_max = 1.0;
  double r_min = 0.0, r_max = 5.0;
};

struct PositioningScenario {
  DeploymentGeometry geom;
  double region_halfwidth = 0.5;
  double clock_offset_min = 0.0;
  double clock_offset_max = 5e-9;
  long trials_per_point = 1;
};

/// Everything a run needs, loadable from a strict key=value file.
struct Scenario {
  // [grid]
  double f0 = 0.0, df = 0.0;
  Index bins = 0;
  Index n_time = 0;

  // [fiber]
  FiberSource fiber;

  // [chain]
  double stages = 0.0;
  double noise_var = 0.0;
  double pa_gain = 1.0;  // linear (file key is pa_gain_db)
  double pa_nonlin = 0.0;
  int oversample = 1;

  // [wireless]
  double amplitude = 1.0;
  bool random_phase = true;
  double phase = 0.0;        // used when !random_phase
  double tau = 0.0;          // seconds
  double tau_jitter = 0.0;   // per-trial uniform addition in [0, tau_jitter)
  std::uint64_t pilot_seed = 7;

  // [estimator]
  EstimatorKind estimator = EstimatorKind::ml_selective;
  SearchGrid2D search;       // ml_* estimators
  PsoScenario pso;           // nls_pso estimator

  // [sweep]
  SweepAxis sweep_axis = SweepAxis::sigma2;
  std::vector<double> sweep_values;

  // [run]
  long trials = 1;
  std::uint64_t master_seed = 1;
  int workers = 0;  // 0 = hardware concurrency

  // [pathloss] (optional; per-distance amplitudes in the position subcommand)
  std::optional<PathlossParams> pathloss;

  // [positioning] (optional; required by the position subcommand)
  std::optional<PositioningScenario> positioning;

  void validate() const;
  Config to_config() const;
  std::string serialize() const { return to_config().serialize(); }
  std::uint64_t hash() const;
};

Scenario load_scenario(const std::string& path);
Scenario parse_scenario(const std::string& text, const std::string& origin = "scenario");
void save_scenario(const std::string& path, const Scenario& s);

/// Materialized per-sweep-point model: the grid/fiber/chain with the swept
/// value applied.
struct ScenarioInstance {
  FrequencyGrid grid;
  UnitFiberResponse fiber;
  PilotSequence pilot;
  ChainParams chain;
  LinearModel model;  // for the ML estimators
};

ScenarioInstance instantiate(const Scenario& s, double sweep_value);

const char* to_string(SweepAxis axis);
const char* to_string(EstimatorKind kind);

}  // namespace rof
