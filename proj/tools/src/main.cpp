#include <iostream>

#include <CLI11.hpp>

#include "ctrlab/version.hpp"
#include "ctrlab_tools/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Numerical lab for affine optimal control problems", "ctrlab"};
  app.set_version_flag("--version", ctrlab::kVersion);
  ctrlab::tools::CliOptions opts;
  std::uint64_t seed = 0;
  int threads = 1;
  app.add_option("command", opts.command, "simulate | solve | shoot | classify | sweep | bench | hormander")
      ->required()
      ->check(CLI::IsMember(ctrlab::tools::command_names()));
  app.add_option("--config", opts.config_path, "YAML run configuration")->check(CLI::ExistingFile);
  app.add_option("--out", opts.out_dir, "output directory (default out/<command>)");
  auto* seed_opt = app.add_option("--seed", seed, "RNG seed for multistart (overrides solver.seed)");
  auto* threads_opt = app.add_option("--threads", threads, "worker threads")->check(CLI::PositiveNumber);
  app.add_option("--verbosity", opts.verbosity, "0 quiet, 1 default, 2 adds matrices and controls")
      ->check(CLI::Range(0, 2));
  CLI11_PARSE(app, argc, argv);
  if (*seed_opt) opts.seed = seed;
  if (*threads_opt) opts.threads = threads;
  return ctrlab::tools::run(opts, std::cout, std::cerr);
}
