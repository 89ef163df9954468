#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Bayesian inference for level-set Cox processes"};
  app.require_subcommand(1);
  app.set_version_flag("--version", "lscp 0.1.0");

  std::string config;
  lscp::cli::Overrides ov;
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out;
  bool verbose = false;

  const std::pair<const char*, const char*> modes[] = {
      {"simulate", "Simulate a point pattern from a level-set Cox process"},
      {"fit", "Fit the spatial model to a point pattern"},
      {"fit-st", "Fit the spatiotemporal model to a time-stamped pattern"},
      {"predict", "Posterior predictions from saved draws"},
      {"diagnose", "ESS and DIC from saved samples and draws"},
  };
  for (const auto& [name, help] : modes) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config, "Run configuration (JSON)");
    sub->add_option("--seed", seed, "Override the master seed");
    sub->add_option("--threads", threads, "Worker threads (0 = all cores)")->check(CLI::NonNegativeNumber);
    sub->add_option("--out", out, "Output directory");
    sub->add_flag("-v,--verbose", verbose, "Debug logging");
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  CLI::App* sub = app.get_subcommands().front();
  if (sub->count("--seed")) ov.seed = seed;
  if (sub->count("--threads")) ov.threads = threads;
  if (sub->count("--out")) ov.out = out;
  if (config.empty()) {
    spdlog::error("missing --config <path>");
    return 1;
  }
  return lscp::cli::run_command(sub->get_name(), config, ov);
}
