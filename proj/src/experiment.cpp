#include "gausson/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>
#include <thread>

#include "gausson/analytic.hpp"
#include "gausson/bohmian.hpp"
#include "gausson/diagnostics.hpp"
#include "gausson/errors.hpp"

namespace gausson {

using json = nlohmann::json;

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

// ---------------------------------------------------------------------------
// Parsing helpers

void expect_keys(const json& j, std::initializer_list<std::string_view> allowed,
                 const std::string& context) {
  if (!j.is_object()) throw ConfigError(context + ": expected an object");
  for (const auto& [key, value] : j.items()) {
    if (std::find(allowed.begin(), allowed.end(), key) == allowed.end()) {
      throw ConfigError(context + ": unknown key '" + key + "'");
    }
  }
}

double get_number(const json& j, const std::string& key, const std::string& context) {
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(context + "." + key + ": expected a number");
  return v.get<double>();
}

void read_number(const json& j, const std::string& key, const std::string& context,
                 double& out) {
  if (j.contains(key)) out = get_number(j, key, context);
}

std::vector<double> parse_range(const json& j, const std::string& context) {
  std::vector<double> values;
  if (j.is_number()) {
    values.push_back(j.get<double>());
  } else if (j.is_array()) {
    for (const auto& v : j) {
      if (!v.is_number()) throw ConfigError(context + ": range values must be numbers");
      values.push_back(v.get<double>());
    }
  } else if (j.is_object() && j.contains("values")) {
    expect_keys(j, {"values"}, context);
    return parse_range(j.at("values"), context);
  } else if (j.is_object()) {
    expect_keys(j, {"start", "stop", "count"}, context);
    if (!j.contains("start") || !j.contains("stop") || !j.contains("count")) {
      throw ConfigError(context + ": range needs start, stop and count");
    }
    const double start = get_number(j, "start", context);
    const double stop = get_number(j, "stop", context);
    const auto& c = j.at("count");
    if (!c.is_number_integer() || c.get<long>() < 1) {
      throw ConfigError(context + ".count: expected a positive integer (empty range)");
    }
    const long count = c.get<long>();
    for (long i = 0; i < count; ++i) {
      values.push_back(count == 1 ? start
                                  : start + (stop - start) * static_cast<double>(i) /
                                                static_cast<double>(count - 1));
    }
  } else {
    throw ConfigError(context + ": expected a number, an array or a range object");
  }
  if (values.empty()) throw ConfigError(context + ": empty range");
  return values;
}

Mode parse_mode(const std::string& s) {
  if (s == "analytic") return Mode::analytic;
  if (s == "evolve") return Mode::evolve;
  if (s == "trajectories") return Mode::trajectories;
  if (s == "sweep") return Mode::sweep;
  if (s == "validate") return Mode::validate;
  throw ConfigError("mode: unknown mode '" + s + "'");
}

std::string mode_name(Mode m) {
  switch (m) {
    case Mode::analytic: return "analytic";
    case Mode::evolve: return "evolve";
    case Mode::trajectories: return "trajectories";
    case Mode::sweep: return "sweep";
    case Mode::validate: return "validate";
  }
  return "?";
}

bool on_lattice(double t, double dt) {
  const double steps = t / dt;
  return std::abs(steps - std::round(steps)) <= 1e-6;
}

// ---------------------------------------------------------------------------
// Output helpers

class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, const std::vector<std::string>& header)
      : out_(path) {
    if (!out_) throw Error("cannot open " + path.string() + " for writing");
    for (std::size_t i = 0; i < header.size(); ++i) out_ << (i ? "," : "") << header[i];
    out_ << '\n';
  }
  void row(const std::vector<double>& values, const std::string& tail = {}) {
    for (std::size_t i = 0; i < values.size(); ++i) {
      out_ << (i ? "," : "") << format_number(values[i]);
    }
    if (!tail.empty()) out_ << ',' << tail;
    out_ << '\n';
  }

 private:
  std::ofstream out_;
};

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << j.dump(2) << '\n';
}

json params_json(const PhysicalParams& p) {
  return {{"mass", p.mass}, {"hbar", p.hbar},   {"nu", p.nu},
          {"kappa", p.kappa}, {"delta0", p.delta0}, {"x0", p.x0},
          {"v0", p.v0},     {"deltadot0", p.deltadot0}};
}

json dimensionless_json(const DimensionlessParams& d) {
  return {{"nu", d.nu_t}, {"kappa", d.kappa_t},         {"x0", d.x0_t},
          {"v0", d.v0_t}, {"deltadot0", d.deltadot0_t}, {"delta0", d.delta0_t}};
}

json grid_json(const Grid& g) {
  return {{"x_min", g.x_min}, {"x_max", g.x_max}, {"n_points", g.n_points}, {"dt", g.dt}};
}

std::vector<double> lattice_times(double t_end, double interval) {
  const long count = std::lround(t_end / interval);
  std::vector<double> ts;
  ts.reserve(static_cast<std::size_t>(count) + 1);
  for (long k = 0; k <= count; ++k) ts.push_back(static_cast<double>(k) * interval);
  return ts;
}

// Closed-form width where one exists: free packet (kappa = nu = 0) or a
// packet released at rest at its Gausson width.
double closed_form_width(const PhysicalParams& p, double t) {
  if (p.kappa == 0.0 && p.nu == 0.0) {
    const double c = p.hbar / (2.0 * p.mass * p.delta0);
    const double lin = p.delta0 + p.deltadot0 * t;
    return std::sqrt(lin * lin + c * c * t * t);
  }
  if (p.deltadot0 == 0.0 && p.kappa > 0.0 &&
      std::abs(p.kappa - gausson_kappa(p)) <= 1e-12 * p.kappa) {
    return p.delta0;
  }
  return kNaN;
}

void write_trajectories(const std::filesystem::path& path, const TrajectoryEnsemble& ens) {
  std::vector<std::string> header{"t"};
  for (std::size_t i = 0; i < ens.particle_count(); ++i) header.push_back("x" + std::to_string(i));
  CsvWriter w(path, header);
  for (std::size_t k = 0; k < ens.time_count(); ++k) {
    std::vector<double> row{ens.times[k]};
    row.insert(row.end(), ens.positions[k].begin(), ens.positions[k].end());
    w.row(row);
  }
}

struct PdeRun {
  Grid grid;
  std::vector<double> times;
  std::vector<WavepacketState> snapshots;  // one per time
  std::vector<DiagnosticsRecord> records;
};

PdeRun run_pde(const ExperimentConfig& config, const PhysicalParams& p) {
  PdeRun run;
  run.grid = config.auto_grid ? recommended_grid(p, config.t_end, config.grid) : config.grid;
  const double dt = run.grid.dt;
  run.times = lattice_times(config.t_end, config.snapshot_interval);

  std::vector<double> requested = run.times;
  const bool separate_prev = std::abs(config.snapshot_interval - dt) > 1e-12 * dt;
  if (separate_prev) {
    for (std::size_t k = 1; k < run.times.size(); ++k) {
      requested.push_back(static_cast<double>(std::lround(run.times[k] / dt) - 1) * dt);
    }
  }
  const WavepacketState init = init_gaussian(run.grid, p, initial_gausson_state(p));
  const auto states = evolve(init, p, config.t_end, requested);

  auto index_of = [&](double t) {
    const long target = std::lround(t / dt);
    for (std::size_t i = 0; i < states.size(); ++i) {
      if (std::lround(states[i].t / dt) == target) return i;
    }
    throw Error("internal: missing snapshot");
  };

  for (std::size_t k = 0; k < run.times.size(); ++k) {
    const std::size_t i = index_of(run.times[k]);
    run.snapshots.push_back(states[i]);
    const WavepacketState* prev = nullptr;
    if (k > 0) prev = &states[separate_prev ? i - 1 : index_of(run.times[k - 1])];
    run.records.push_back(make_record(states[i], p, prev));
  }
  return run;
}

void write_diagnostics(const std::filesystem::path& path, const PdeRun& run) {
  CsvWriter w(path, {"t", "norm", "mean_x", "mean_p", "width", "mean_ln_rho", "mean_S", "energy",
                     "continuity_residual", "gaussianity"});
  for (const auto& r : run.records) {
    w.row({r.t, r.norm, r.mean_x, r.mean_p, r.width, r.mean_ln_rho, r.mean_S, r.energy,
           r.continuity_residual, r.gaussianity});
  }
}

// width.csv for PDE runs: measured width, its centred difference, and the
// width equation as reference.
void write_pde_width(const std::filesystem::path& path, const PdeRun& run,
                     const WidthSeries& reference) {
  CsvWriter w(path, {"t", "delta", "delta_dot", "delta_analytic"});
  const std::size_t n = run.records.size();
  for (std::size_t k = 0; k < n; ++k) {
    double rate = kNaN;
    if (n > 1) {
      const std::size_t a = k == 0 ? 0 : k - 1;
      const std::size_t b = k + 1 == n ? k : k + 1;
      rate = (run.records[b].width - run.records[a].width) / (run.times[b] - run.times[a]);
    }
    w.row({run.times[k], run.records[k].width, rate, reference.deltas[k]});
  }
}

json resolved_json(const ExperimentConfig& config, const DimensionlessParams& d) {
  const PhysicalParams p = d.as_physical();
  json j;
  j["dimensionless"] = dimensionless_json(d);
  j["scaled_units"] = {{"hbar", DimensionlessParams::kHbar}, {"mass", DimensionlessParams::kMass}};
  const double gk = gausson_kappa(p);
  j["gausson_kappa_t"] = gk;
  j["tau_b_gausson_t"] = 1.0 / gk;
  j["tau_b_t"] = d.kappa_t > 0.0 ? json(bohmian_time_constant(d.kappa_t)) : json(nullptr);
  try {
    j["tau_b_approx_t"] = bohmian_time_constant_approx(p);
  } catch (const DomainError&) {
    j["tau_b_approx_t"] = nullptr;
  }
  j["stationary_width_residual"] = stationary_width_residual(p, d.delta0_t);

  if (config.physical) {
    const PhysicalParams& phys = *config.physical;
    const auto [unused, s] = nondimensionalize(phys);
    (void)unused;
    j["scales"] = {{"length_m", s.length}, {"time_s", s.time}, {"velocity_m_per_s", s.velocity}};
    j["constants"] = {{"mass_kg", phys.mass}, {"hbar_J_s", phys.hbar}};
    const double kappa_si = d.kappa_t / s.time;
    j["si"] = {{"kappa_per_s", kappa_si},
               {"gausson_kappa_per_s", gk / s.time},
               {"tau_b_s", kappa_si > 0.0 ? json(1.0 / kappa_si) : json(nullptr)},
               {"tau_b_approx_s", j["tau_b_approx_t"].is_null()
                                      ? json(nullptr)
                                      : json(j["tau_b_approx_t"].get<double>() * s.time)}};
    if (phys.mass == codata::electron_mass) {
      const double tau = 1.0 / (gk / s.time);
      const double ratio = tau / kReferenceTauBMax;
      const double orders = std::log10(ratio);
      j["tau_b_reference"] = {
          {"computed_tau_b_s", tau},
          {"formula", "2 m delta0^2 / hbar at nu -> 0; 1/gausson_kappa in general"},
          {"reference_tau_b_max_s", kReferenceTauBMax},
          {"ratio", ratio},
          {"log10_ratio", orders},
          {"flag", std::abs(orders) >= 0.5 ? "ORDER-OF-MAGNITUDE DISCREPANCY with the reference value"
                                           : "consistent with the reference value"}};
    }
  }
  return j;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

// ---------------------------------------------------------------------------
// Config

void ExperimentConfig::validate() const {
  if (physical.has_value() == dimensionless.has_value()) {
    throw ConfigError("config: exactly one of 'physical' and 'dimensionless' is required");
  }
  if (physical) physical->validate();
  if (dimensionless) dimensionless->as_physical().validate();
  if (!(width_step > 0.0)) throw ConfigError("width_step: must be > 0");
  if (mode == Mode::sweep) {
    if (sweep.nu.empty() || sweep.delta0.empty()) throw ConfigError("sweep: empty range");
    for (double v : sweep.nu) {
      if (!(v >= 0.0)) throw ConfigError("sweep.nu: values must be >= 0");
    }
    for (double v : sweep.delta0) {
      if (!(v > 0.0)) throw ConfigError("sweep.delta0: values must be > 0");
    }
    for (double v : sweep.kappa) {
      if (!(v >= 0.0)) throw ConfigError("sweep.kappa: values must be >= 0");
    }
    return;
  }
  grid.validate();
  if (!(t_end > 0.0)) throw ConfigError("t_end: must be > 0");
  if (!(snapshot_interval > 0.0)) throw ConfigError("snapshot_interval: must be > 0");
  if (!on_lattice(t_end, snapshot_interval)) {
    throw ConfigError("t_end: must be a multiple of snapshot_interval");
  }
  if (mode != Mode::analytic && !on_lattice(snapshot_interval, grid.dt)) {
    throw ConfigError("snapshot_interval: must be a multiple of grid.dt");
  }
  if ((mode == Mode::trajectories || mode == Mode::validate) &&
      snapshot_interval > 10.0 * grid.dt * (1.0 + 1e-12)) {
    throw ConfigError("snapshot_interval: trajectory modes need an interval <= 10 dt");
  }
  if (ensemble.n < 1) throw ConfigError("ensemble.n: must be >= 1");
  if (ensemble.scheme != "quantile" && ensemble.scheme != "symmetric") {
    throw ConfigError("ensemble.scheme: expected quantile or symmetric");
  }
  if (!(tolerances.width > 0 && tolerances.trajectory > 0 && tolerances.momentum_rel > 0 &&
        tolerances.momentum_abs > 0 && tolerances.norm_drift > 0)) {
    throw ConfigError("tolerances: must be > 0");
  }
}

ExperimentConfig parse_config(const json& j) {
  expect_keys(j,
              {"mode", "physical", "dimensionless", "kappa_mode", "grid", "auto_grid", "t_end",
               "snapshot_interval", "width_step", "ensemble", "sweep", "tolerances",
               "output_dir"},
              "config");
  ExperimentConfig c;
  if (!j.contains("mode") || !j.at("mode").is_string()) {
    throw ConfigError("mode: required string");
  }
  c.mode = parse_mode(j.at("mode").get<std::string>());

  if (j.contains("physical")) {
    const auto& b = j.at("physical");
    expect_keys(b, {"mass", "hbar", "nu", "kappa", "delta0", "x0", "v0", "deltadot0"}, "physical");
    for (const char* key : {"mass", "hbar", "delta0"}) {
      if (!b.contains(key)) throw ConfigError(std::string("physical.") + key + ": required");
    }
    PhysicalParams p;
    read_number(b, "mass", "physical", p.mass);
    read_number(b, "hbar", "physical", p.hbar);
    read_number(b, "nu", "physical", p.nu);
    read_number(b, "kappa", "physical", p.kappa);
    read_number(b, "delta0", "physical", p.delta0);
    read_number(b, "x0", "physical", p.x0);
    read_number(b, "v0", "physical", p.v0);
    read_number(b, "deltadot0", "physical", p.deltadot0);
    c.physical = p;
  }
  if (j.contains("dimensionless")) {
    const auto& b = j.at("dimensionless");
    expect_keys(b, {"nu", "kappa", "x0", "v0", "deltadot0", "delta0"}, "dimensionless");
    DimensionlessParams d;
    read_number(b, "nu", "dimensionless", d.nu_t);
    read_number(b, "kappa", "dimensionless", d.kappa_t);
    read_number(b, "x0", "dimensionless", d.x0_t);
    read_number(b, "v0", "dimensionless", d.v0_t);
    read_number(b, "deltadot0", "dimensionless", d.deltadot0_t);
    read_number(b, "delta0", "dimensionless", d.delta0_t);
    c.dimensionless = d;
  }
  if (j.contains("kappa_mode")) {
    const auto& v = j.at("kappa_mode");
    const std::string s = v.is_string() ? v.get<std::string>() : "";
    if (s == "explicit") {
      c.kappa_mode = KappaMode::explicit_value;
    } else if (s == "gausson") {
      c.kappa_mode = KappaMode::gausson;
    } else {
      throw ConfigError("kappa_mode: expected 'explicit' or 'gausson'");
    }
  }
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    expect_keys(g, {"x_min", "x_max", "n_points", "dt"}, "grid");
    read_number(g, "x_min", "grid", c.grid.x_min);
    read_number(g, "x_max", "grid", c.grid.x_max);
    read_number(g, "dt", "grid", c.grid.dt);
    if (g.contains("n_points")) {
      if (!g.at("n_points").is_number_integer() || g.at("n_points").get<long>() < 1) {
        throw ConfigError("grid.n_points: expected a positive integer");
      }
      c.grid.n_points = g.at("n_points").get<std::size_t>();
    }
  }
  if (j.contains("auto_grid")) {
    if (!j.at("auto_grid").is_boolean()) throw ConfigError("auto_grid: expected a boolean");
    c.auto_grid = j.at("auto_grid").get<bool>();
  }
  read_number(j, "t_end", "config", c.t_end);
  read_number(j, "snapshot_interval", "config", c.snapshot_interval);
  read_number(j, "width_step", "config", c.width_step);
  if (j.contains("ensemble")) {
    const auto& e = j.at("ensemble");
    expect_keys(e, {"n", "scheme"}, "ensemble");
    if (e.contains("n")) {
      if (!e.at("n").is_number_integer() || e.at("n").get<long>() < 1) {
        throw ConfigError("ensemble.n: expected a positive integer");
      }
      c.ensemble.n = e.at("n").get<std::size_t>();
    }
    if (e.contains("scheme")) {
      if (!e.at("scheme").is_string()) throw ConfigError("ensemble.scheme: expected a string");
      c.ensemble.scheme = e.at("scheme").get<std::string>();
    }
  }
  if (j.contains("sweep")) {
    const auto& s = j.at("sweep");
    expect_keys(s, {"kappa", "nu", "delta0"}, "sweep");
    if (s.contains("kappa")) {
      const auto& k = s.at("kappa");
      if (k.is_string()) {
        if (k.get<std::string>() != "gausson") {
          throw ConfigError("sweep.kappa: expected a range or \"gausson\"");
        }
        c.sweep.kappa.clear();
      } else {
        c.sweep.kappa = parse_range(k, "sweep.kappa");
      }
    }
    if (s.contains("nu")) c.sweep.nu = parse_range(s.at("nu"), "sweep.nu");
    if (s.contains("delta0")) c.sweep.delta0 = parse_range(s.at("delta0"), "sweep.delta0");
  }
  if (j.contains("tolerances")) {
    const auto& t = j.at("tolerances");
    expect_keys(t, {"width", "trajectory", "momentum_rel", "momentum_abs", "norm_drift"},
                "tolerances");
    read_number(t, "width", "tolerances", c.tolerances.width);
    read_number(t, "trajectory", "tolerances", c.tolerances.trajectory);
    read_number(t, "momentum_rel", "tolerances", c.tolerances.momentum_rel);
    read_number(t, "momentum_abs", "tolerances", c.tolerances.momentum_abs);
    read_number(t, "norm_drift", "tolerances", c.tolerances.norm_drift);
  }
  if (j.contains("output_dir")) {
    if (!j.at("output_dir").is_string()) throw ConfigError("output_dir: expected a string");
    c.output_dir = j.at("output_dir").get<std::string>();
  }
  c.validate();
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot read config file " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw ConfigError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return parse_config(j);
}

json to_json(const ExperimentConfig& c) {
  json j;
  j["mode"] = mode_name(c.mode);
  if (c.physical) j["physical"] = params_json(*c.physical);
  if (c.dimensionless) j["dimensionless"] = dimensionless_json(*c.dimensionless);
  j["kappa_mode"] = c.kappa_mode == KappaMode::gausson ? "gausson" : "explicit";
  j["grid"] = grid_json(c.grid);
  j["auto_grid"] = c.auto_grid;
  j["t_end"] = c.t_end;
  j["snapshot_interval"] = c.snapshot_interval;
  j["width_step"] = c.width_step;
  j["ensemble"] = {{"n", c.ensemble.n}, {"scheme", c.ensemble.scheme}};
  json sweep;
  sweep["kappa"] = c.sweep.kappa.empty() ? json("gausson") : json(c.sweep.kappa);
  sweep["nu"] = c.sweep.nu;
  sweep["delta0"] = c.sweep.delta0;
  j["sweep"] = sweep;
  j["tolerances"] = {{"width", c.tolerances.width},
                     {"trajectory", c.tolerances.trajectory},
                     {"momentum_rel", c.tolerances.momentum_rel},
                     {"momentum_abs", c.tolerances.momentum_abs},
                     {"norm_drift", c.tolerances.norm_drift}};
  j["output_dir"] = c.output_dir;
  return j;
}

std::vector<std::string> preset_names() {
  return {"electron", "gausson-nu0", "gausson-friction", "free", "spreading",
          "small-friction-sweep"};
}

ExperimentConfig preset_config(std::string_view name) {
  ExperimentConfig c;
  DimensionlessParams d;
  if (name == "electron") {
    c.mode = Mode::analytic;
    PhysicalParams p = electron_preset();
    p.kappa = 0.0;
    c.physical = p;
    c.kappa_mode = KappaMode::gausson;
    c.t_end = 3.0;
    c.snapshot_interval = 0.01;
  } else if (name == "gausson-nu0") {
    c.mode = Mode::validate;
    c.dimensionless = d;
    c.kappa_mode = KappaMode::gausson;
  } else if (name == "gausson-friction") {
    c.mode = Mode::validate;
    d.nu_t = 1.5;
    c.dimensionless = d;
    c.kappa_mode = KappaMode::gausson;
  } else if (name == "free") {
    c.mode = Mode::evolve;
    c.dimensionless = d;
    c.t_end = 1.0;
  } else if (name == "spreading") {
    c.mode = Mode::validate;
    d.kappa_t = 0.5;
    d.nu_t = 0.2;
    c.dimensionless = d;
    c.auto_grid = true;
  } else if (name == "small-friction-sweep") {
    c.mode = Mode::sweep;
    c.dimensionless = d;
    c.kappa_mode = KappaMode::gausson;
    c.sweep.nu = {0.0, 0.02, 0.05, 0.1, 0.2, 0.4};
  } else {
    throw ConfigError("unknown preset '" + std::string(name) + "'");
  }
  c.output_dir = "out/" + std::string(name);
  c.validate();
  return c;
}

DimensionlessParams resolve_parameters(const ExperimentConfig& config) {
  DimensionlessParams d =
      config.physical ? nondimensionalize(*config.physical).first : *config.dimensionless;
  if (config.kappa_mode == KappaMode::gausson) d.kappa_t = gausson_kappa(d.as_physical());
  return d;
}

// ---------------------------------------------------------------------------
// Sweep

std::string width_regime(const PhysicalParams& p) {
  PhysicalParams q = p;
  q.deltadot0 = 0.0;
  const double unit = 2.0 * q.mass * q.delta0 * q.delta0 / q.hbar;
  const double probe = 0.05 * unit;
  const double ts[] = {probe};
  const WidthSeries w = integrate_width(q, initial_gausson_state(q), ts);
  const double rate = w.delta_dots.back();
  const double threshold = 1e-9 * q.delta0 / unit;
  if (rate > threshold) return "spreading";
  if (rate < -threshold) return "contracting";
  return "stationary";
}

std::vector<SweepRow> sweep(const ExperimentConfig& config, std::size_t threads) {
  struct Point {
    double kappa;  // NaN: Gausson value
    double nu;
    double delta0;
  };
  std::vector<Point> points;
  for (double nu : config.sweep.nu) {
    for (double d0 : config.sweep.delta0) {
      if (config.sweep.kappa.empty()) {
        points.push_back({kNaN, nu, d0});
      } else {
        for (double k : config.sweep.kappa) points.push_back({k, nu, d0});
      }
    }
  }

  std::vector<SweepRow> rows(points.size());
  auto evaluate = [&](std::size_t i) {
    DimensionlessParams d;
    d.nu_t = points[i].nu;
    d.delta0_t = points[i].delta0;
    PhysicalParams p = d.as_physical();
    const double gk = gausson_kappa(p);
    p.kappa = std::isnan(points[i].kappa) ? gk : points[i].kappa;
    SweepRow r;
    r.kappa_t = p.kappa;
    r.nu_t = p.nu;
    r.delta0_t = p.delta0;
    r.tau_b_exact = bohmian_time_constant(gk);
    try {
      r.tau_b_approx = bohmian_time_constant_approx(p);
    } catch (const DomainError&) {
      r.tau_b_approx = kNaN;
    }
    r.residual = stationary_width_residual(p, p.delta0);
    r.regime = width_regime(p);
    rows[i] = r;
  };

  const std::size_t workers = std::max<std::size_t>(1, std::min(threads, points.size()));
  if (workers == 1) {
    for (std::size_t i = 0; i < points.size(); ++i) evaluate(i);
  } else {
    std::vector<std::thread> pool;
    std::vector<std::exception_ptr> errors(workers);
    for (std::size_t w = 0; w < workers; ++w) {
      pool.emplace_back([&, w] {
        try {
          for (std::size_t i = w; i < points.size(); i += workers) evaluate(i);
        } catch (...) {
          errors[w] = std::current_exception();
        }
      });
    }
    for (auto& th : pool) th.join();
    for (auto& e : errors) {
      if (e) std::rethrow_exception(e);
    }
  }

  std::stable_sort(rows.begin(), rows.end(), [](const SweepRow& a, const SweepRow& b) {
    if (a.kappa_t != b.kappa_t) return a.kappa_t < b.kappa_t;
    if (a.nu_t != b.nu_t) return a.nu_t < b.nu_t;
    return a.delta0_t < b.delta0_t;
  });
  return rows;
}

// ---------------------------------------------------------------------------
// Run

namespace {

struct ValidationCheck {
  std::string name;
  double value;
  double tolerance;
  bool pass;
};

int execute(const ExperimentConfig& config, const RunOptions& options, RunResult& result) {
  const auto& dir = options.out_dir;
  std::filesystem::create_directories(dir);
  auto path = [&](const char* name) {
    result.files.push_back(dir / name);
    return dir / name;
  };

  const DimensionlessParams d = resolve_parameters(config);
  const PhysicalParams p = d.as_physical();

  json manifest;
  manifest["version"] = kVersion;
  manifest["config"] = to_json(config);
  manifest["resolved"] = resolved_json(config, d);
  manifest["units"] =
      "CSV values are in scaled units: length delta0, time 2 m delta0^2 / hbar "
      "(hbar = 1, mass = 1/2); see resolved.scales for SI factors";
  manifest["threads_hint"] = options.threads;

  int code = 0;

  if (config.mode == Mode::sweep) {
    const auto rows = sweep(config, options.threads);
    CsvWriter w(path("sweep.csv"),
                {"kappa_t", "nu_t", "tau_b_exact", "tau_b_approx", "residual", "regime",
                 "delta0_t"});
    for (const auto& r : rows) {
      std::ostringstream tail;
      tail << r.regime << ',' << format_number(r.delta0_t);
      w.row({r.kappa_t, r.nu_t, r.tau_b_exact, r.tau_b_approx, r.residual}, tail.str());
    }
    manifest["rows"] = rows.size();
    write_json(path("manifest.json"), manifest);
    return 0;
  }

  const std::vector<double> times = lattice_times(config.t_end, config.snapshot_interval);
  const GaussonState init = initial_gausson_state(p);
  const WidthSeries width = integrate_width(p, init, times, {config.width_step, 1e-6});
  const auto x0 = sample_initial_positions(d.delta0_t, config.ensemble.n, config.ensemble.scheme,
                                           d.x0_t);
  manifest["ensemble_x0"] = x0;

  if (config.mode == Mode::analytic) {
    {
      CsvWriter w(path("width.csv"), {"t", "delta", "delta_dot", "delta_analytic"});
      for (std::size_t k = 0; k < times.size(); ++k) {
        w.row({times[k], width.deltas[k], width.delta_dots[k], closed_form_width(p, times[k])});
      }
    }
    const auto ens = bohmian_trajectories_analytic(p, x0, width, times);
    write_trajectories(path("trajectories.csv"), ens);
    std::vector<std::string> header{"t"};
    for (std::size_t i = 0; i < x0.size(); ++i) header.push_back("F" + std::to_string(i));
    CsvWriter w(path("forces.csv"), header);
    for (std::size_t k = 0; k < times.size(); ++k) {
      const double delta = width.deltas[k];
      const double centre = classical_trajectory(p, times[k]).xbar;
      const double coeff = p.hbar * p.hbar / (4.0 * p.mass * std::pow(delta, 4));
      std::vector<double> row{times[k]};
      for (double x : ens.positions[k]) row.push_back(coeff * (x - centre));
      w.row(row);
    }
    write_json(path("manifest.json"), manifest);
    return 0;
  }

  const PdeRun run = run_pde(config, p);
  manifest["grid_used"] = grid_json(run.grid);
  write_diagnostics(path("diagnostics.csv"), run);
  write_pde_width(path("width.csv"), run, width);

  if (config.mode == Mode::evolve) {
    write_json(path("manifest.json"), manifest);
    return 0;
  }

  EnsembleOptions eopts;
  eopts.threads = options.threads;
  const TrajectoryEnsemble numeric = advance_ensemble(x0, run.snapshots, p, eopts);
  const TrajectoryEnsemble closed = bohmian_trajectories_analytic(p, x0, width, times);
  write_trajectories(path("trajectories.csv"), numeric);
  write_trajectories(path("trajectories_analytic.csv"), closed);
  manifest["flagged_particles"] = numeric.flagged;

  if (config.mode == Mode::validate) {
    RunSeries pde;
    pde.times = times;
    for (const auto& r : run.records) {
      pde.widths.push_back(r.width);
      pde.mean_p.push_back(r.mean_p);
    }
    pde.trajectories = numeric;
    RunSeries ref;
    ref.times = times;
    ref.widths = width.deltas;
    ref.trajectories = closed;
    const ComparisonReport report = compare_runs(pde, ref, d.nu_t);

    const auto& tol = config.tolerances;
    std::vector<ValidationCheck> checks;
    checks.push_back({"width_rel_error", report.max_width_rel_error, tol.width,
                      report.max_width_rel_error <= tol.width});
    const double traj = report.max_trajectory_error.value_or(kNaN);
    checks.push_back({"trajectory_abs_error", traj, tol.trajectory, traj <= tol.trajectory});
    const bool flagged = std::any_of(numeric.flagged.begin(), numeric.flagged.end(),
                                     [](bool b) { return b; });
    checks.push_back({"flagged_particles", flagged ? 1.0 : 0.0, 0.0, !flagged});
    checks.push_back({"non_crossing", is_non_crossing(numeric) ? 0.0 : 1.0, 0.0,
                      is_non_crossing(numeric)});
    double drift = 0.0;
    for (const auto& r : run.records) drift = std::max(drift, std::abs(r.norm - run.records[0].norm));
    drift /= config.t_end;
    checks.push_back({"norm_drift_per_time", drift, tol.norm_drift, drift <= tol.norm_drift});
    if (std::abs(run.records[0].mean_p) > 1e-12 && report.momentum_decay_exponent) {
      const double err = std::abs(*report.momentum_decay_exponent + d.nu_t);
      const double band = std::max(tol.momentum_rel * d.nu_t, tol.momentum_abs);
      checks.push_back({"momentum_decay_exponent_error", err, band, err <= band});
    }

    json jr = report.to_json();
    json jc = json::array();
    bool all = true;
    for (const auto& c : checks) {
      jc.push_back({{"name", c.name}, {"value", c.value}, {"tolerance", c.tolerance}, {"pass", c.pass}});
      all = all && c.pass;
    }
    jr["checks"] = jc;
    jr["pass"] = all;
    write_json(path("report.json"), jr);
    manifest["validation_pass"] = all;
    if (!all) {
      code = 4;
      std::ostringstream os;
      os << "validation failed:";
      for (const auto& c : checks) {
        if (!c.pass) os << ' ' << c.name << '=' << format_number(c.value);
      }
      result.message = os.str();
    } else {
      std::ostringstream os;
      os << "validation passed: max width error " << report.max_width_rel_error
         << ", max trajectory error " << traj;
      result.message = os.str();
    }
  }
  write_json(path("manifest.json"), manifest);
  return code;
}

}  // namespace

RunResult run(const ExperimentConfig& config, const RunOptions& options) {
  RunResult result;
  try {
    config.validate();
    result.exit_code = execute(config, options, result);
  } catch (const ConfigError& e) {
    result.exit_code = 2;
    result.message = std::string("configuration error: ") + e.what();
  } catch (const NumericalError& e) {
    result.exit_code = 3;
    result.message = std::string("numerical failure: ") + e.what();
  } catch (const std::exception& e) {
    result.exit_code = 1;
    result.message = std::string("error: ") + e.what();
  }
  return result;
}

}  // namespace gausson
