// kdp: batch driver for the Kirchhoff double phase solvers.

#include <iostream>

#include "CLI11.hpp"
#include "config.hpp"
#include "run.hpp"

int main(int argc, char** argv) {
  using namespace kdp::cli;

  CLI::App app{"Kirchhoff double phase solver driver"};
  std::string config_path, mode, out;
  std::uint64_t seed = 0;
  int workers = 0;
  bool dump = false;
  app.add_option("--config", config_path, "JSON run configuration");
  app.add_option("--mode", mode,
                 "check | solve-positive | solve-negative | solve-nodal | sweep | fiber-plot | report");
  app.add_option("--seed", seed, "base seed for random starts");
  app.add_option("--out", out, "output directory (default: $KDP_OUTPUT_DIR, else kdp_out)");
  app.add_option("--workers", workers, "worker threads")->check(CLI::PositiveNumber);
  app.add_flag("--dump-config", dump, "print the resolved configuration as JSON and exit");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kParseError;
  }

  RunConfig config;
  try {
    config = config_path.empty() ? parse_config(nlohmann::json::object()) : load_config(config_path);
    if (!mode.empty()) config.mode = parse_mode(mode);
    if (app.count("--seed") > 0) config.seed = seed;
    if (!out.empty()) config.output_dir = out;
    if (workers > 0) config.workers = workers;
  } catch (const ConfigError& e) {
    std::cerr << "kdp: " << e.what() << '\n';
    return kParseError;
  }

  if (dump) {
    std::cout << to_json(config).dump(2) << '\n';
    return kOk;
  }
  try {
    return run(config, std::cerr);
  } catch (const std::exception& e) {
    std::cerr << "kdp: " << e.what() << '\n';
    return kNonconvergence;
  }
}
