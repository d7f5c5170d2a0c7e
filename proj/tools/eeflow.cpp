// Batch CLI for the eeflow library: energy-efficiency solve, experiment
// sweeps, queueing metrics, config validation and topology generation.

#include <iostream>
#include <string>

#include "CLI11.hpp"
#include "eeflow/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"energy-efficient flow control for mmWave-backhauled "
               "small-cell networks"};
  app.require_subcommand(1);

  eeflow::CliOptions opts;

  const char* names[] = {"solve", "sweep", "queue", "validate-config",
                         "gen-topology"};
  const char* descs[] = {
      "maximize energy efficiency on the configured instance",
      "run the configured experiment sweep and write CSV tables",
      "solve the configured queueing specs and write metrics",
      "parse and validate the configuration, write nothing",
      "generate a topology file from the configured generator"};
  for (int c = 0; c < 5; ++c) {
    CLI::App* sub = app.add_subcommand(names[c], descs[c]);
    sub->add_option("--config", opts.config_path, "configuration file")
        ->required();
    sub->add_option("--out", opts.out_dir, "output directory");
    sub->add_option_function<uint64_t>(
        "--seed", [&opts](uint64_t v) { opts.seed = v; },
        "override the top-level seed");
    sub->add_option_function<double>(
        "--tol", [&opts](double v) { opts.tol = v; },
        "override the optimizer tolerance");
    sub->callback([&opts, sub]() { opts.command = sub->get_name(); });
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    std::cerr << "error code=E_USAGE msg=\"" << e.what() << "\"\n";
    return 2;
  }

  return eeflow::run_command(opts, std::cerr);
}
