#pragma once

#include <optional>
#include <vector>

#include "rof/common.hpp"
#include "rof/estimation.hpp"
#include "rof/rng.hpp"
#include "rof/signal.hpp"

namespace rof {

/// Ceiling deployment: RU r of RoF m sits at (r*spacing, m*spacing, 0),
/// indices 1-based; the UE moves in the plane z = -ue_height_below_ceiling.
struct DeploymentGeometry {
  double spacing = 1.0;  // gamma, meters
  int rofs = 3;          // M
  int rus_per_rof = 5;   // U
  double ue_height_below_ceiling = 1.5;  // meters

  void validate() const;
};

struct UePosition {
  double px = 0.0, py = 0.0;
  double pz = -1.5;  // negative below the ceiling plane
};

/// Per-RoF delay estimates tau_m plus the serving (entry) RU index per RoF.
struct ToaSet {
  ArrayXd taus;                // seconds, length M
  std::vector<int> entry_rus;  // 1-based, length M
};

struct SearchRegion {
  double x_min = 0.0, x_max = 1.0;
  double y_min = 0.0, y_max = 1.0;

  void validate() const;
  double cx() const { return 0.5 * (x_min + x_max); }
  double cy() const { return 0.5 * (y_min + y_max); }
};

/// Euclidean UE-to-RU distance. Indices are validated against the geometry.
double ru_ue_distance(const DeploymentGeometry& geom, int rof_index, int ru_index,
                      const UePosition& ue);

/// Serving RU of RoF `rof_index`: nearest by distance, ties toward the
/// smaller index.
int nearest_ru(const DeploymentGeometry& geom, int rof_index, const UePosition& ue);

/// Mean of the per-RoF residuals R = tau - d/c.
double clock_offset_hat(const Eigen::Ref<const ArrayXd>& residuals);

/// Minimizes ||R - mean(R)||^2 with R(P) = tau - d(P)/c over the region:
/// coarse lattice with cell c/(4*bandwidth), then damped Gauss-Newton on the
/// projected residual, iterates clamped to the region. When two refined
/// minima tie (the serving RUs of parallel RoFs share one column, so the
/// objective has an exact mirror symmetry about it), the one nearer the
/// region center wins.
Eigen::Vector2d position_solve(const ToaSet& toas, const DeploymentGeometry& geom,
                               const SearchRegion& region, double bandwidth);

/// One trajectory point of one Monte Carlo trial.
struct TrajectoryRow {
  double px_true = 0.0, py_true = 0.0;
  double px_hat = 0.0, py_hat = 0.0;
  double err_m = 0.0;
};

struct TrajectoryConfig {
  DeploymentGeometry geom;
  FrequencyGrid grid;
  UnitFiberResponse fiber;
  PilotSequence pilot;
  double pa_gain = 1.0;
  double sigma2 = 1e-3;
  double amplitude = 1.0;  // fixed wireless amplitude, unless pathloss is set
  std::optional<PathlossParams> pathloss;  // per-RoF |A| from distance when set
  NoiseRegime regime = NoiseRegime::flat;
  double clock_offset_min = 0.0;  // uniform per trial, shared by the three RoFs
  double clock_offset_max = 5e-9;
  double tau_step = 0.0;          // 0 -> 1/(8*bandwidth)
  double r_pad = 0.0;             // widens the r search axis beyond [1, U]
  double region_halfwidth = 0.5;  // meters around the true point
  int trials = 1;
  std::uint64_t seed = 1;
  int workers = 1;
};

struct TrajectoryResult {
  std::vector<TrajectoryRow> rows;  // trajectory-major, then trial
  double rmse = 0.0;
};

/// Simulates three uplinks per trajectory point (nearest RU per RoF),
/// estimates tau per RoF with the ML grid search, solves the position, and
/// accumulates the RMSE over trials. Deterministic per (seed, point, trial).
TrajectoryResult trajectory_experiment(const std::vector<UePosition>& trajectory,
                                       const TrajectoryConfig& cfg);

}  // namespace rof
