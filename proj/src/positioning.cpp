#include "rof/positioning.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "rof/parallel.hpp"

namespace rof {

namespace {

struct Anchor {
  double x, y;
};

std::vector<Anchor> anchors_of(const ToaSet& toas, const DeploymentGeometry& geom) {
  const int m = int(toas.taus.size());
  if (m < 3) throw std::invalid_argument("position_solve: need at least 3 RoFs");
  if (int(toas.entry_rus.size()) != m)
    throw std::invalid_argument("position_solve: taus/entry_rus length mismatch");
  std::vector<Anchor> anchors(static_cast<size_t>(m));
  for (int i = 0; i < m; ++i) {
    const int ru = toas.entry_rus[size_t(i)];
    if (ru < 1 || ru > geom.rus_per_rof)
      throw std::invalid_argument("position_solve: entry RU index out of range");
    anchors[size_t(i)] = {double(ru) * geom.spacing, double(i + 1) * geom.spacing};
  }
  return anchors;
}

double projected_cost(const std::vector<Anchor>& anchors, const ArrayXd& taus, double ue_z,
                      double px, double py) {
  const int m = int(anchors.size());
  double sum = 0.0, sum2 = 0.0;
  for (int i = 0; i < m; ++i) {
    const double dx = px - anchors[size_t(i)].x;
    const double dy = py - anchors[size_t(i)].y;
    const double d = std::sqrt(dx * dx + dy * dy + ue_z * ue_z);
    const double res = taus(i) - d / kSpeedOfLight;
    sum += res;
    sum2 += res * res;
  }
  return sum2 - sum * sum / double(m);
}

// Damped Gauss-Newton on the projected residual, iterates clamped to the
// region. Returns the refined point and its cost.
std::pair<Eigen::Vector2d, double> refine(const std::vector<Anchor>& anchors, const ArrayXd& taus,
                                          double ue_z, Eigen::Vector2d p,
                                          const SearchRegion& region, double step_cap) {
  const int m = int(anchors.size());
  const auto clamp = [&region](Eigen::Vector2d q) {
    q(0) = std::min(std::max(q(0), region.x_min), region.x_max);
    q(1) = std::min(std::max(q(1), region.y_min), region.y_max);
    return q;
  };
  p = clamp(p);
  double cost = projected_cost(anchors, taus, ue_z, p(0), p(1));

  Eigen::MatrixXd jac(m, 2);
  Eigen::VectorXd res(m);
  const auto fill = [&](const Eigen::Vector2d& q) {
    for (int i = 0; i < m; ++i) {
      const double dx = q(0) - anchors[size_t(i)].x;
      const double dy = q(1) - anchors[size_t(i)].y;
      const double d = std::sqrt(dx * dx + dy * dy + ue_z * ue_z);
      res(i) = taus(i) - d / kSpeedOfLight;
      jac(i, 0) = -dx / (d * kSpeedOfLight);
      jac(i, 1) = -dy / (d * kSpeedOfLight);
    }
    res.array() -= res.mean();
  };

  // Phase 1: damped Gauss-Newton with cost-gated acceptance for the descent
  // into the basin.
  double damping = 0.0;
  for (int iter = 0; iter < 60; ++iter) {
    fill(p);
    Eigen::RowVector2d col_mean = jac.colwise().mean();
    Eigen::MatrixXd jc = jac.rowwise() - col_mean;

    if (iter == 0 && jc.norm() < 1e-12 * jac.norm())
      throw std::domain_error("position_solve: degenerate geometry (flat objective)");

    const Eigen::Matrix2d h = jc.transpose() * jc;
    const Eigen::Vector2d g = jc.transpose() * res;
    bool stepped = false;
    for (int attempt = 0; attempt < 8 && !stepped; ++attempt) {
      Eigen::Matrix2d hd = h + damping * Eigen::Matrix2d::Identity();
      const double det = hd.determinant();
      if (!(std::abs(det) > 1e-300)) {
        damping = std::max(damping * 10.0, 1e-6 * (h.trace() + 1e-300));
        continue;
      }
      const Eigen::Vector2d step = -(hd.inverse() * g);
      const Eigen::Vector2d cand = clamp(p + step);
      const double cand_cost = projected_cost(anchors, taus, ue_z, cand(0), cand(1));
      if (cand_cost <= cost) {
        const bool converged = (cand - p).norm() < 1e-12;
        p = cand;
        cost = cand_cost;
        damping *= 0.25;
        stepped = true;
        if (converged) iter = 60;
      } else {
        damping = std::max(damping * 10.0, 1e-6 * (h.trace() + 1e-300));
      }
    }
    if (!stepped) break;
  }

  // Phase 2: a fixed budget of full Newton steps with no cost gating. Cost
  // comparisons cannot be resolved at the rounding floor of the squared
  // residual, so gating there leaves the weak direction wherever the
  // accept/reject pattern stalled; this smooth contraction settles on a
  // reproducible fixed point instead. Near the mirror axis the residuals are
  // large and Gauss-Newton's J^T J misses most of the curvature, so the
  // second-order term is kept.
  for (int iter = 0; iter < 60; ++iter) {
    fill(p);
    Eigen::RowVector2d col_mean = jac.colwise().mean();
    Eigen::MatrixXd jc = jac.rowwise() - col_mean;
    Eigen::Matrix2d h = jc.transpose() * jc;
    const Eigen::Vector2d g = jc.transpose() * res;
    for (int i = 0; i < m; ++i) {
      const double dx = p(0) - anchors[size_t(i)].x;
      const double dy = p(1) - anchors[size_t(i)].y;
      const double d = std::sqrt(dx * dx + dy * dy + ue_z * ue_z);
      Eigen::Matrix2d hd;  // Hessian of d_i w.r.t. (px, py)
      hd(0, 0) = (1.0 - dx * dx / (d * d)) / d;
      hd(1, 1) = (1.0 - dy * dy / (d * d)) / d;
      hd(0, 1) = hd(1, 0) = -dx * dy / (d * d * d);
      h += res(i) * (-1.0 / kSpeedOfLight) * hd;
    }
    // Active-set reduction: a coordinate pinned at the region boundary with
    // the descent direction pointing outward is dropped from the step, so
    // the free coordinate gets its reduced (not joint) Newton step.
    const bool x_active = (p(0) <= region.x_min && -g(0) < 0.0) ||
                          (p(0) >= region.x_max && -g(0) > 0.0);
    const bool y_active = (p(1) <= region.y_min && -g(1) < 0.0) ||
                          (p(1) >= region.y_max && -g(1) > 0.0);
    Eigen::Vector2d step = Eigen::Vector2d::Zero();
    if (x_active && y_active) break;
    if (x_active) {
      const double hyy = std::max(h(1, 1), 1e-12 * std::abs(h.trace()) + 1e-300);
      step(1) = std::clamp(-g(1) / hyy, -step_cap, step_cap);
    } else if (y_active) {
      const double hxx = std::max(h(0, 0), 1e-12 * std::abs(h.trace()) + 1e-300);
      step(0) = std::clamp(-g(0) / hxx, -step_cap, step_cap);
    } else {
      Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> eig(h);
      double mu = 1e-12 * std::abs(h.trace()) + 1e-300;
      if (eig.eigenvalues()(0) <= 0.0) mu += -eig.eigenvalues()(0) + 1e-6 * std::abs(h.trace());
      step = -((h + mu * Eigen::Matrix2d::Identity()).inverse() * g);
      // Trust region: the phase-1 point is already within a coarse cell of
      // the basin bottom, so longer steps only mean a near-singular Hessian.
      for (int guard = 0; guard < 60 && step.norm() > step_cap; ++guard) {
        mu *= 10.0;
        step = -((h + mu * Eigen::Matrix2d::Identity()).inverse() * g);
      }
    }
    p = clamp(p + step);
    if (step.norm() < 1e-15 * (1.0 + p.norm())) break;
  }
  return {p, projected_cost(anchors, taus, ue_z, p(0), p(1))};
}

}  // namespace

void DeploymentGeometry::validate() const {
  if (!(spacing > 0.0)) throw std::invalid_argument("DeploymentGeometry: spacing must be positive");
  if (rofs < 1 || rus_per_rof < 1)
    throw std::invalid_argument("DeploymentGeometry: need at least one RoF and one RU");
}

void SearchRegion::validate() const {
  if (!(x_min < x_max) || !(y_min < y_max))
    throw std::invalid_argument("SearchRegion: empty region");
}

double ru_ue_distance(const DeploymentGeometry& geom, int rof_index, int ru_index,
                      const UePosition& ue) {
  if (rof_index < 1 || rof_index > geom.rofs)
    throw std::invalid_argument("ru_ue_distance: RoF index out of range");
  if (ru_index < 1 || ru_index > geom.rus_per_rof)
    throw std::invalid_argument("ru_ue_distance: RU index out of range");
  const double dx = ue.px - double(ru_index) * geom.spacing;
  const double dy = ue.py - double(rof_index) * geom.spacing;
  return std::sqrt(dx * dx + dy * dy + ue.pz * ue.pz);
}

int nearest_ru(const DeploymentGeometry& geom, int rof_index, const UePosition& ue) {
  int best = 1;
  double best_d = ru_ue_distance(geom, rof_index, 1, ue);
  for (int r = 2; r <= geom.rus_per_rof; ++r) {
    const double d = ru_ue_distance(geom, rof_index, r, ue);
    if (d < best_d) {
      best_d = d;
      best = r;
    }
  }
  return best;
}

double clock_offset_hat(const Eigen::Ref<const ArrayXd>& residuals) {
  if (residuals.size() == 0) throw std::invalid_argument("clock_offset_hat: empty residuals");
  return residuals.mean();
}

Eigen::Vector2d position_solve(const ToaSet& toas, const DeploymentGeometry& geom,
                               const SearchRegion& region, double bandwidth) {
  region.validate();
  geom.validate();
  if (!(bandwidth > 0.0)) throw std::invalid_argument("position_solve: bandwidth must be positive");
  const std::vector<Anchor> anchors = anchors_of(toas, geom);
  const double ue_z = -geom.ue_height_below_ceiling;

  // The objective only sees tau through the centered residual, so remove the
  // mean up front; a common offset then perturbs the arithmetic only at the
  // last bit instead of shifting every intermediate.
  ToaSet centered = toas;
  centered.taus -= toas.taus.mean();
  const ArrayXd& taus = centered.taus;
  const double cost_floor = 1e-12 * taus.square().mean();

  const double cell = kSpeedOfLight / (4.0 * bandwidth);
  const Index nx = std::max<Index>(2, Index(std::ceil((region.x_max - region.x_min) / cell)) + 1);
  const Index ny = std::max<Index>(2, Index(std::ceil((region.y_max - region.y_min) / cell)) + 1);
  const auto x_at = [&](Index i) {
    return region.x_min + (region.x_max - region.x_min) * double(i) / double(nx - 1);
  };
  const auto y_at = [&](Index j) {
    return region.y_min + (region.y_max - region.y_min) * double(j) / double(ny - 1);
  };

  Eigen::MatrixXd cost(nx, ny);
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < ny; ++j)
      cost(i, j) = projected_cost(anchors, taus, ue_z, x_at(i), y_at(j));

  // Seed the refinement from every coarse local minimum (up to a handful,
  // cheapest first). The serving RUs of parallel RoFs share one column, so
  // the objective has an exact mirror basin that plain global-best scanning
  // would pick arbitrarily.
  struct Seed {
    double c;
    Index i, j;
  };
  std::vector<Seed> seeds;
  for (Index i = 0; i < nx; ++i)
    for (Index j = 0; j < ny; ++j) {
      bool is_min = true;
      for (Index di = -1; di <= 1 && is_min; ++di)
        for (Index dj = -1; dj <= 1 && is_min; ++dj) {
          const Index ni = i + di, nj = j + dj;
          if (ni < 0 || nj < 0 || ni >= nx || nj >= ny || (di == 0 && dj == 0)) continue;
          if (cost(ni, nj) < cost(i, j)) is_min = false;
        }
      if (is_min) seeds.push_back({cost(i, j), i, j});
    }
  std::sort(seeds.begin(), seeds.end(), [](const Seed& a, const Seed& b) {
    if (a.c != b.c) return a.c < b.c;
    if (a.i != b.i) return a.i < b.i;
    return a.j < b.j;
  });
  if (seeds.size() > 6) seeds.resize(6);

  Eigen::Vector2d best_p{x_at(seeds.front().i), y_at(seeds.front().j)};
  double best_c = std::numeric_limits<double>::infinity();
  double best_center = std::numeric_limits<double>::infinity();
  for (const Seed& seed : seeds) {
    auto [p, c] = refine(anchors, taus, ue_z, {x_at(seed.i), y_at(seed.j)}, region, cell);
    const double center_dist = std::hypot(p(0) - region.cx(), p(1) - region.cy());
    const double tol = 1e-6 * std::min(c, best_c) + cost_floor;
    if (c < best_c - tol) {
      best_c = c;
      best_p = p;
      best_center = center_dist;
    } else if (c <= best_c + tol && center_dist < best_center) {
      // Exact-tie basins (the mirror image): prefer the one nearer the
      // region center, i.e. the caller's prior.
      best_c = std::min(best_c, c);
      best_p = p;
      best_center = center_dist;
    }
  }
  return best_p;
}

TrajectoryResult trajectory_experiment(const std::vector<UePosition>& trajectory,
                                       const TrajectoryConfig& cfg) {
  if (trajectory.empty()) throw std::invalid_argument("trajectory_experiment: empty trajectory");
  cfg.geom.validate();
  if (cfg.geom.rofs < 3)
    throw std::invalid_argument("trajectory_experiment: need at least 3 RoFs");

  const double bandwidth = cfg.grid.bandwidth();
  const double tau_step = cfg.tau_step > 0.0 ? cfg.tau_step : 1.0 / (8.0 * bandwidth);

  LinearModel model;
  model.grid = cfg.grid;
  model.fiber = cfg.fiber;
  model.pilot = cfg.pilot;
  model.gain = cfg.pa_gain;
  model.sigma2 = cfg.sigma2;

  const size_t n_points = trajectory.size();
  const size_t n_rows = n_points * size_t(cfg.trials);
  TrajectoryResult result;
  result.rows.resize(n_rows);

  parallel_for(n_rows, size_t(std::max(1, cfg.workers)), [&](size_t row) {
    const size_t point = row / size_t(cfg.trials);
    const size_t trial = row % size_t(cfg.trials);
    const UePosition& ue = trajectory[point];
    Rng rng = make_stream(cfg.seed, point, trial);

    const double offset = uniform_in(rng, cfg.clock_offset_min, cfg.clock_offset_max);
    const int n_rof = 3;  // served by the three RoFs
    ToaSet toas;
    toas.taus.resize(n_rof);
    toas.entry_rus.resize(size_t(n_rof));

    double max_d = 0.0;
    for (int m = 1; m <= n_rof; ++m)
      max_d = std::max(max_d, ru_ue_distance(cfg.geom, m, nearest_ru(cfg.geom, m, ue), ue));

    SearchGrid2D search;
    search.r_min = 1.0;
    search.r_max = double(cfg.geom.rus_per_rof) + cfg.r_pad;
    search.r_step = 1.0;
    search.tau_min = 0.0;
    search.tau_max = max_d / kSpeedOfLight + cfg.clock_offset_max + 16.0 * tau_step;
    search.tau_step = tau_step;

    for (int m = 1; m <= n_rof; ++m) {
      const int entry = nearest_ru(cfg.geom, m, ue);
      const double d = ru_ue_distance(cfg.geom, m, entry, ue);
      const double amp =
          cfg.pathloss ? pathloss_amplitude(*cfg.pathloss, d, rng) : cfg.amplitude;
      const double phase = uniform_in(rng, -kPi, kPi);
      const WirelessLink link = WirelessLink::from_geometry(d, offset, amp, phase);

      ChainParams chain;
      chain.stages = double(cfg.geom.rus_per_rof - entry + 1);
      chain.noise_var = cfg.sigma2;
      chain.pa = PaParams{cfg.pa_gain, 0.0};
      chain.fiber = cfg.fiber;

      const ArrayXcd x = wireless_input(link, cfg.pilot, cfg.grid);
      const ArrayXcd y = propagate_linear(x, chain, rng);
      const ParamEstimate est = ml_grid_search(y, search, cfg.regime, model);

      toas.taus(m - 1) = est.tau_hat;
      toas.entry_rus[size_t(m - 1)] = entry;
    }

    SearchRegion region{ue.px - cfg.region_halfwidth, ue.px + cfg.region_halfwidth,
                        ue.py - cfg.region_halfwidth, ue.py + cfg.region_halfwidth};
    const Eigen::Vector2d pos = position_solve(toas, cfg.geom, region, bandwidth);

    TrajectoryRow& out = result.rows[row];
    out.px_true = ue.px;
    out.py_true = ue.py;
    out.px_hat = pos(0);
    out.py_hat = pos(1);
    out.err_m = std::hypot(pos(0) - ue.px, pos(1) - ue.py);
  });

  double sq = 0.0;
  for (const TrajectoryRow& row : result.rows) sq += row.err_m * row.err_m;
  result.rmse = std::sqrt(sq / double(result.rows.size()));
  return result;
}

}  // namespace rof
