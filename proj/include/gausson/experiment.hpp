#pragma once

#include <cstddef>
#include <filesystem>
#include <json.hpp>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "gausson/model.hpp"
#include "gausson/pde.hpp"

namespace gausson {

inline constexpr std::string_view kVersion = "0.1.0";

enum class Mode { analytic, evolve, trajectories, sweep, validate };
enum class KappaMode { explicit_value, gausson };

struct EnsembleSpec {
  std::size_t n = 9;
  std::string scheme = "quantile";
};

// Axes of a parameter sweep in scaled units. An empty kappa axis means
// "Gausson value for each (nu, delta0)".
struct SweepSpec {
  std::vector<double> kappa;
  std::vector<double> nu{0.0};
  std::vector<double> delta0{1.0};
};

// Pass/fail thresholds for the validate mode.
struct Tolerances {
  double width = 1e-3;          // relative, PDE vs width equation
  double trajectory = 1e-3;     // absolute, scaled units
  double momentum_rel = 0.01;   // fitted <p> decay exponent vs -nu
  double momentum_abs = 1e-6;   // floor of the exponent band (nu = 0)
  double norm_drift = 1e-8;     // per unit scaled time
};

struct ExperimentConfig {
  Mode mode = Mode::evolve;
  std::optional<PhysicalParams> physical;
  std::optional<DimensionlessParams> dimensionless;
  KappaMode kappa_mode = KappaMode::explicit_value;
  Grid grid;
  bool auto_grid = false;
  double t_end = 3.0;
  double snapshot_interval = 0.01;
  double width_step = 1e-3;
  EnsembleSpec ensemble;
  SweepSpec sweep;
  Tolerances tolerances;
  std::string output_dir = "out";

  // Checks everything that can be checked without running.
  void validate() const;
};

// Strict parse: unknown keys, wrong types and missing parameter blocks throw
// ConfigError naming the field.
ExperimentConfig parse_config(const nlohmann::json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json to_json(const ExperimentConfig& config);

std::vector<std::string> preset_names();
ExperimentConfig preset_config(std::string_view name);

// Scaled parameters with kappa resolved according to kappa_mode.
DimensionlessParams resolve_parameters(const ExperimentConfig& config);

struct SweepRow {
  double kappa_t = 0.0;
  double nu_t = 0.0;
  double delta0_t = 1.0;
  double tau_b_exact = 0.0;   // 1 / gausson_kappa(nu, delta0)
  double tau_b_approx = 0.0;  // NaN outside the small-friction condition
  double residual = 0.0;      // stationary_width_residual at delta0
  std::string regime;         // spreading | stationary | contracting
};

// Sign of delta' shortly after release from rest at width delta0.
std::string width_regime(const PhysicalParams& p);

// Rows in lexicographic (kappa, nu, delta0) order; independent of threads.
std::vector<SweepRow> sweep(const ExperimentConfig& config, std::size_t threads = 1);

struct RunOptions {
  std::filesystem::path out_dir = "out";
  std::size_t threads = 1;
};

struct RunResult {
  int exit_code = 0;  // 0 ok, 2 config, 3 numerical, 4 validation tolerance
  std::string message;
  std::vector<std::filesystem::path> files;
};

// Runs the experiment and writes manifest.json plus the mode's CSV files.
// Never throws for library errors; they map to exit codes.
RunResult run(const ExperimentConfig& config, const RunOptions& options);

// printf("%.17g"), with "nan"/"inf" spelled out.
std::string format_number(double v);

}  // namespace gausson
