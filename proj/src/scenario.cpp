#include "rof/scenario.hpp"

#include <cmath>
#include <filesystem>
#include <stdexcept>

#include "rof/io.hpp"

namespace rof {

namespace {

SweepAxis axis_from(const std::string& s, const ConfigReader& reader) {
  if (s == "sigma2") return SweepAxis::sigma2;
  if (s == "amplitude") return SweepAxis::amplitude;
  if (s == "bandwidth") return SweepAxis::bandwidth;
  throw std::invalid_argument("sweep.axis: expected sigma2|amplitude|bandwidth, got '" + s + "'");
  (void)reader;
}

EstimatorKind estimator_from(const std::string& s) {
  if (s == "ml_flat") return EstimatorKind::ml_flat;
  if (s == "ml_selective") return EstimatorKind::ml_selective;
  if (s == "nls_pso") return EstimatorKind::nls_pso;
  throw std::invalid_argument("estimator.type: expected ml_flat|ml_selective|nls_pso, got '" + s +
                              "'");
}

}  // namespace

const char* to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::sigma2: return "sigma2";
    case SweepAxis::amplitude: return "amplitude";
    case SweepAxis::bandwidth: return "bandwidth";
  }
  return "?";
}

const char* to_string(EstimatorKind kind) {
  switch (kind) {
    case EstimatorKind::ml_flat: return "ml_flat";
    case EstimatorKind::ml_selective: return "ml_selective";
    case EstimatorKind::nls_pso: return "nls_pso";
  }
  return "?";
}

Scenario parse_scenario(const std::string& text, const std::string& origin) {
  const Config cfg = Config::parse(text, origin);
  ConfigReader r(cfg);
  Scenario s;

  s.f0 = r.get_double("grid", "f0_hz");
  s.df = r.get_double("grid", "spacing_hz");
  s.bins = Index(r.get_long("grid", "bins"));
  s.n_time = Index(r.get_long("grid", "n_time", long(s.bins)));

  const std::string source = r.get_string("fiber", "source");
  if (source == "synthetic") {
    s.fiber.kind = FiberSource::Kind::synthetic;
    const std::string kind = r.get_string("fiber", "kind");
    if (kind == "flat")
      s.fiber.synth.kind = FiberKind::flat;
    else if (kind == "selective")
      s.fiber.synth.kind = FiberKind::selective;
    else
      r.fail("fiber", "kind", "expected flat|selective");
    s.fiber.synth.total_energy = r.get_double("fiber", "total_energy");
    s.fiber.synth.ripple_depth = r.get_double("fiber", "ripple_depth", 0.35);
    s.fiber.synth.ripple_cycles = r.get_double("fiber", "ripple_cycles", 2.0);
    s.fiber.synth.ripple_phase = r.get_double("fiber", "ripple_phase", 0.25);
    s.fiber.synth.delay_taps = r.get_double("fiber", "delay_taps", 0.0);
    s.fiber.synth.quad_phase = r.get_double("fiber", "quad_phase", 0.0);
  } else if (source == "measurement") {
    s.fiber.kind = FiberSource::Kind::measurement;
    s.fiber.path = r.get_string("fiber", "path");
    s.fiber.smooth_window = int(r.get_long("fiber", "smooth_window", 0));
  } else {
    r.fail("fiber", "source", "expected synthetic|measurement");
  }

  s.stages = r.get_double("chain", "stages");
  s.noise_var = r.get_double("chain", "noise_var");
  s.pa_gain = db_to_linear_amplitude(r.get_double("chain", "pa_gain_db"));
  s.pa_nonlin = r.get_double("chain", "pa_nonlin", 0.0);
  s.oversample = int(r.get_long("chain", "oversample", 1));

  s.amplitude = r.get_double("wireless", "amplitude");
  const std::string phase = r.get_string("wireless", "phase", "random");
  if (phase == "random") {
    s.random_phase = true;
  } else {
    s.random_phase = false;
    try {
      s.phase = std::stod(phase);
    } catch (...) {
      r.fail("wireless", "phase", "expected 'random' or a number");
    }
  }
  s.tau = r.get_double("wireless", "tau_s");
  s.tau_jitter = r.get_double("wireless", "tau_jitter_s", 0.0);
  s.pilot_seed = cfg.has("wireless", "pilot_seed") ? r.get_uint64("wireless", "pilot_seed") : 7;

  s.estimator = estimator_from(r.get_string("estimator", "type"));
  if (s.estimator == EstimatorKind::nls_pso) {
    s.pso.iterations = int(r.get_long("estimator.pso", "iterations", 100));
    s.pso.particles = int(r.get_long("estimator.pso", "particles", 1000));
    s.pso.w_personal = r.get_double("estimator.pso", "w_personal", 1.0);
    s.pso.w_global = r.get_double("estimator.pso", "w_global", 0.7);
    s.pso.inertia = r.get_double("estimator.pso", "inertia", 0.3);
    s.pso.inertia_decay = r.get_double("estimator.pso", "inertia_decay", 0.7);
    s.pso.amp_min = r.get_double("estimator.pso", "amp_min");
    s.pso.amp_max = r.get_double("estimator.pso", "amp_max");
    s.pso.tau_min = r.get_double("estimator.pso", "tau_min_s");
    s.pso.tau_max = r.get_double("estimator.pso", "tau_max_s");
    s.pso.r_min = r.get_double("estimator.pso", "r_min");
    s.pso.r_max = r.get_double("estimator.pso", "r_max");
  } else {
    s.search.r_min = r.get_double("estimator.grid", "r_min");
    s.search.r_max = r.get_double("estimator.grid", "r_max");
    s.search.r_step = r.get_double("estimator.grid", "r_step");
    s.search.tau_min = r.get_double("estimator.grid", "tau_min_s");
    s.search.tau_max = r.get_double("estimator.grid", "tau_max_s");
    s.search.tau_step = r.get_double("estimator.grid", "tau_step_s", 0.0);
  }

  s.sweep_axis = axis_from(r.get_string("sweep", "axis"), r);
  s.sweep_values = r.get_doubles("sweep", "values");

  s.trials = r.get_long("run", "trials");
  s.master_seed = r.get_uint64("run", "master_seed");
  s.workers = int(r.get_long("run", "workers", 0));

  if (cfg.tree().count("pathloss")) {
    PathlossParams p;
    p.tx_gain = r.get_double("pathloss", "tx_gain");
    p.rx_gain = r.get_double("pathloss", "rx_gain");
    p.wavelength = r.get_double("pathloss", "wavelength_m");
    p.shadow_sigma_db = r.get_double("pathloss", "shadow_sigma_db", 0.0);
    s.pathloss = p;
  }

  if (cfg.tree().count("positioning")) {
    PositioningScenario pos;
    pos.geom.spacing = r.get_double("positioning", "spacing_m");
    pos.geom.rofs = int(r.get_long("positioning", "rofs"));
    pos.geom.rus_per_rof = int(r.get_long("positioning", "rus_per_rof"));
    pos.geom.ue_height_below_ceiling = r.get_double("positioning", "ue_height_m", 1.5);
    pos.region_halfwidth = r.get_double("positioning", "region_halfwidth_m");
    pos.clock_offset_min = r.get_double("positioning", "clock_offset_min_s", 0.0);
    pos.clock_offset_max = r.get_double("positioning", "clock_offset_max_s", 0.0);
    pos.trials_per_point = r.get_long("positioning", "trials_per_point");
    s.positioning = pos;
  }

  r.finish();
  s.validate();
  return s;
}

Scenario load_scenario(const std::string& path) {
  return parse_scenario(read_file(path), path);
}

void save_scenario(const std::string& path, const Scenario& s) {
  write_file_atomic(path, s.serialize());
}

void Scenario::validate() const {
  if (bins < 2) throw std::invalid_argument("scenario: grid.bins must be >= 2");
  if (!(df > 0.0)) throw std::invalid_argument("scenario: grid.spacing_hz must be positive");
  if (n_time < bins) throw std::invalid_argument("scenario: grid.n_time must be >= bins");
  if (trials < 1) throw std::invalid_argument("scenario: run.trials must be >= 1");
  if (sweep_values.empty()) throw std::invalid_argument("scenario: sweep.values must be non-empty");
  for (double v : sweep_values)
    if (!std::isfinite(v)) throw std::invalid_argument("scenario: sweep.values must be finite");
  if (stages < 0.0) throw std::invalid_argument("scenario: chain.stages must be nonnegative");
  if (noise_var < 0.0) throw std::invalid_argument("scenario: chain.noise_var must be nonnegative");
  if (oversample < 1) throw std::invalid_argument("scenario: chain.oversample must be >= 1");
  if (fiber.kind == FiberSource::Kind::measurement && !std::filesystem::exists(fiber.path))
    throw std::invalid_argument("scenario: fiber.path does not exist: " + fiber.path);
  if (estimator != EstimatorKind::nls_pso) {
    if (!(search.r_min < search.r_max) || !(search.tau_min < search.tau_max))
      throw std::invalid_argument("scenario: estimator.grid ranges must have min < max");
    if (!(search.r_step > 0.0) || search.tau_step < 0.0)
      throw std::invalid_argument("scenario: estimator.grid steps invalid");
  } else {
    if (!(pso.amp_min < pso.amp_max) || !(pso.tau_min < pso.tau_max) || !(pso.r_min < pso.r_max))
      throw std::invalid_argument("scenario: estimator.pso bounds must have min < max");
    if (pso.iterations < 1 || pso.particles < 1)
      throw std::invalid_argument("scenario: estimator.pso sizes must be >= 1");
  }
  if (positioning) {
    positioning->geom.validate();
    if (positioning->trials_per_point < 1)
      throw std::invalid_argument("scenario: positioning.trials_per_point must be >= 1");
    if (!(positioning->region_halfwidth > 0.0))
      throw std::invalid_argument("scenario: positioning.region_halfwidth_m must be positive");
  }
}

Config Scenario::to_config() const {
  Config c;
  const auto num = [](double v) { return format_double(v); };
  c.set("grid", "f0_hz", num(f0));
  c.set("grid", "spacing_hz", num(df));
  c.set("grid", "bins", std::to_string(bins));
  c.set("grid", "n_time", std::to_string(n_time));

  if (fiber.kind == FiberSource::Kind::synthetic) {
    c.set("fiber", "source", "synthetic");
    c.set("fiber", "kind", fiber.synth.kind == FiberKind::flat ? "flat" : "selective");
    c.set("fiber", "total_energy", num(fiber.synth.total_energy));
    c.set("fiber", "ripple_depth", num(fiber.synth.ripple_depth));
    c.set("fiber", "ripple_cycles", num(fiber.synth.ripple_cycles));
    c.set("fiber", "ripple_phase", num(fiber.synth.ripple_phase));
    c.set("fiber", "delay_taps", num(fiber.synth.delay_taps));
    c.set("fiber", "quad_phase", num(fiber.synth.quad_phase));
  } else {
    c.set("fiber", "source", "measurement");
    c.set("fiber", "path", fiber.path);
    c.set("fiber", "smooth_window", std::to_string(fiber.smooth_window));
  }

  c.set("chain", "stages", num(stages));
  c.set("chain", "noise_var", num(noise_var));
  c.set("chain", "pa_gain_db", num(linear_amplitude_to_db(pa_gain)));
  c.set("chain", "pa_nonlin", num(pa_nonlin));
  c.set("chain", "oversample", std::to_string(oversample));

  c.set("wireless", "amplitude", num(amplitude));
  c.set("wireless", "phase", random_phase ? "random" : num(phase));
  c.set("wireless", "tau_s", num(tau));
  c.set("wireless", "tau_jitter_s", num(tau_jitter));
  c.set("wireless", "pilot_seed", std::to_string(pilot_seed));

  c.set("estimator", "type", to_string(estimator));
  if (estimator == EstimatorKind::nls_pso) {
    c.set("estimator.pso", "iterations", std::to_string(pso.iterations));
    c.set("estimator.pso", "particles", std::to_string(pso.particles));
    c.set("estimator.pso", "w_personal", num(pso.w_personal));
    c.set("estimator.pso", "w_global", num(pso.w_global));
    c.set("estimator.pso", "inertia", num(pso.inertia));
    c.set("estimator.pso", "inertia_decay", num(pso.inertia_decay));
    c.set("estimator.pso", "amp_min", num(pso.amp_min));
    c.set("estimator.pso", "amp_max", num(pso.amp_max));
    c.set("estimator.pso", "tau_min_s", num(pso.tau_min));
    c.set("estimator.pso", "tau_max_s", num(pso.tau_max));
    c.set("estimator.pso", "r_min", num(pso.r_min));
    c.set("estimator.pso", "r_max", num(pso.r_max));
  } else {
    c.set("estimator.grid", "r_min", num(search.r_min));
    c.set("estimator.grid", "r_max", num(search.r_max));
    c.set("estimator.grid", "r_step", num(search.r_step));
    c.set("estimator.grid", "tau_min_s", num(search.tau_min));
    c.set("estimator.grid", "tau_max_s", num(search.tau_max));
    c.set("estimator.grid", "tau_step_s", num(search.tau_step));
  }

  c.set("sweep", "axis", to_string(sweep_axis));
  std::string values;
  for (size_t i = 0; i < sweep_values.size(); ++i)
    values += (i ? ", " : "") + num(sweep_values[i]);
  c.set("sweep", "values", values);

  c.set("run", "trials", std::to_string(trials));
  c.set("run", "master_seed", std::to_string(master_seed));
  c.set("run", "workers", std::to_string(workers));

  if (pathloss) {
    c.set("pathloss", "tx_gain", num(pathloss->tx_gain));
    c.set("pathloss", "rx_gain", num(pathloss->rx_gain));
    c.set("pathloss", "wavelength_m", num(pathloss->wavelength));
    c.set("pathloss", "shadow_sigma_db", num(pathloss->shadow_sigma_db));
  }

  if (positioning) {
    c.set("positioning", "spacing_m", num(positioning->geom.spacing));
    c.set("positioning", "rofs", std::to_string(positioning->geom.rofs));
    c.set("positioning", "rus_per_rof", std::to_string(positioning->geom.rus_per_rof));
    c.set("positioning", "ue_height_m", num(positioning->geom.ue_height_below_ceiling));
    c.set("positioning", "region_halfwidth_m", num(positioning->region_halfwidth));
    c.set("positioning", "clock_offset_min_s", num(positioning->clock_offset_min));
    c.set("positioning", "clock_offset_max_s", num(positioning->clock_offset_max));
    c.set("positioning", "trials_per_point", std::to_string(positioning->trials_per_point));
  }
  return c;
}

std::uint64_t Scenario::hash() const { return fnv1a64(serialize()); }

ScenarioInstance instantiate(const Scenario& s, double sweep_value) {
  ScenarioInstance inst;

  double f0 = s.f0, df = s.df;
  if (s.sweep_axis == SweepAxis::bandwidth) {
    // Bandwidth sweeps keep the band center fixed.
    const double fc = s.f0 + 0.5 * double(s.bins - 1) * s.df;
    df = sweep_value / double(s.bins);
    f0 = fc - 0.5 * double(s.bins - 1) * df;
  }
  inst.grid = FrequencyGrid::regular(f0, df, s.bins, s.n_time);

  if (s.fiber.kind == FiberSource::Kind::synthetic) {
    inst.fiber = synth_fiber(s.fiber.synth, inst.grid);
  } else {
    RawMeasurement meas = read_measurement(s.fiber.path);
    if (s.fiber.smooth_window > 0) {
      meas.magnitude_db = median_smooth(meas.magnitude_db, s.fiber.smooth_window);
      meas.group_delay = median_smooth(meas.group_delay, s.fiber.smooth_window);
    }
    inst.fiber = build_unit_response(meas, inst.grid);
  }

  inst.pilot = PilotSequence::qpsk(s.bins, s.pilot_seed);

  inst.chain.stages = s.stages;
  inst.chain.noise_var = s.sweep_axis == SweepAxis::sigma2 ? sweep_value : s.noise_var;
  inst.chain.pa = PaParams{s.pa_gain, s.pa_nonlin};
  inst.chain.fiber = inst.fiber;
  inst.chain.oversample = s.oversample;

  inst.model.grid = inst.grid;
  inst.model.fiber = inst.fiber;
  inst.model.pilot = inst.pilot;
  inst.model.gain = s.pa_gain;
  inst.model.sigma2 = inst.chain.noise_var;
  return inst;
}

}  // namespace rof
