// Experiment runner: gausson --preset NAME | --config PATH [--out DIR] [--threads N]

#include <CLI11.hpp>
#include <iostream>

#include "gausson/errors.hpp"
#include "gausson/experiment.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Gaussian packets under continuous measurement and friction: analytic "
               "reduction, split-step evolution and Bohmian trajectories"};
  std::string config_path;
  std::string preset;
  std::string out_dir;
  std::size_t threads = 1;
  bool list = false;
  auto* config_opt = app.add_option("--config", config_path, "JSON experiment config");
  auto* preset_opt = app.add_option("--preset", preset, "built-in experiment");
  config_opt->excludes(preset_opt);
  app.add_option("--out", out_dir, "output directory (overrides the config)");
  app.add_option("--threads", threads, "worker threads; never changes results")
      ->check(CLI::PositiveNumber);
  app.add_flag("--list-presets", list, "print preset names and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  if (list) {
    for (const auto& name : gausson::preset_names()) std::cout << name << '\n';
    return 0;
  }
  if (config_path.empty() && preset.empty()) {
    std::cerr << "one of --config or --preset is required\n";
    return 2;
  }

  gausson::ExperimentConfig config;
  try {
    config = preset.empty() ? gausson::load_config(config_path) : gausson::preset_config(preset);
  } catch (const gausson::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  }

  gausson::RunOptions options;
  options.out_dir = out_dir.empty() ? config.output_dir : out_dir;
  options.threads = threads;
  const gausson::RunResult result = gausson::run(config, options);
  if (!result.message.empty()) {
    (result.exit_code == 0 ? std::cout : std::cerr) << result.message << '\n';
  }
  for (const auto& f : result.files) std::cout << "wrote " << f.string() << '\n';
  return result.exit_code;
}
