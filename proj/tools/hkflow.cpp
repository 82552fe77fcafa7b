#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "hkflow/run/runner.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Weak H^k-flow solver, level-set analysis and isoperimetric reports"};
  app.require_subcommand(1);
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_given = false;

  for (const auto mode : {hkflow::RunMode::solve, hkflow::RunMode::oracle,
                          hkflow::RunMode::verify, hkflow::RunMode::analyze}) {
    auto* sub = app.add_subcommand(hkflow::to_string(mode));
    sub->add_option("--config", config_path, "run configuration file")->required();
    sub->add_option("--out", out_dir, "output directory (overrides the config)");
    sub->add_option_function<std::uint64_t>(
        "--seed", [&](std::uint64_t s) { seed = s; seed_given = true; },
        "seed for randomized checks (overrides the config)");
  }
  CLI11_PARSE(app, argc, argv);

  const auto mode = *hkflow::parse_mode(app.get_subcommands().front()->get_name());
  hkflow::RunConfig config;
  try {
    config = hkflow::load_config(config_path);
  } catch (const hkflow::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return 2;
  }
  if (config.mode && *config.mode != mode) {
    std::cerr << "configuration error: " << config_path << ": key 'mode': config says "
              << hkflow::to_string(*config.mode) << " but the subcommand is "
              << hkflow::to_string(mode) << "\n";
    return 2;
  }
  if (seed_given) config.seed = seed;
  if (!out_dir.empty()) config.output_dir = out_dir;
  if (config.output_dir.empty()) config.output_dir = "out";

  const hkflow::RunResult result = hkflow::run(config, mode, config.output_dir, std::cerr);
  for (const auto& f : result.files) std::cout << config.output_dir << "/" << f << "\n";
  return result.status;
}
