#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "smx/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"smx: stochastic Maxwell solvers with multi-symplectic schemes"};
  app.set_version_flag("--version", std::string(smx::software_version()));
  app.require_subcommand(1, 1);
  app.fallthrough();

  smx::CliOptions opts;
  std::string config, out;
  std::uint64_t seed = 0, paths = 0;

  app.add_option("--config", config, "key = value configuration file")->check(CLI::ExistingFile);
  app.add_option("--seed", seed, "override the noise seed");
  app.add_option("--out", out, "output directory");
  app.add_option("--paths", paths, "override the number of Monte-Carlo paths");
  app.add_flag("--svg", opts.svg, "also write SVG charts");

  const char* help[] = {
      "run an ensemble and write energy, divergence and snapshot CSVs",
      "averaged energy against the predicted linear growth",
      "averaged discrete divergence over time",
      "first-step Err-Div from the increment oracle over a list of path counts",
      "mean-square convergence against a fine reference",
      "2-form conservation check on a small grid",
      "spectral noise coefficients and trace"};
  for (std::size_t k = 0; k < std::size(smx::kSubcommands); ++k) {
    app.add_subcommand(smx::kSubcommands[k], help[k]);
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  opts.subcommand = app.get_subcommands().front()->get_name();
  if (app.count("--config")) opts.config_file = config;
  if (app.count("--seed")) opts.seed = seed;
  if (app.count("--out")) opts.out_dir = out;
  if (app.count("--paths")) opts.paths = paths;
  return smx::dispatch(opts, std::cout, std::cerr);
}
