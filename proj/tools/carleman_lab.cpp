#include <cstdint>
#include <exception>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "carleman/study.hpp"

int main(int argc, char** argv) {
  CLI::App app{"carleman-lab: numerical checks of the L^p - L^p' Carleman inequality on R x M'"};
  std::string command;
  std::string config_path;
  std::optional<std::string> out_dir;
  std::optional<std::uint64_t> seed;
  app.add_option("command", command, "gap | multiplier-check | cluster-constants | proof-checks | flaw-demo | carleman-sweep")
      ->required();
  app.add_option("--config", config_path, "INI study configuration")->required();
  app.add_option("--out", out_dir, "output directory (overrides [output] dir)");
  app.add_option("--seed", seed, "random seed (overrides [study] seed)");
  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 1;
  }

  try {
    auto config = carleman::load_config(config_path);
    if (out_dir) config.output_dir = *out_dir;
    if (seed) config.seed = *seed;
    const int status = carleman::run_experiment(config, command);
    std::cout << command << ": " << (status == 0 ? "all assertions passed" : "assertion failures, see summary.json")
              << " (" << config.output_dir << ")\n";
    return status;
  } catch (const carleman::usage_error& e) {
    std::cerr << "usage error: " << e.what() << "\n" << app.help();
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
