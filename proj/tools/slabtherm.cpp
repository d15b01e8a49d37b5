#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "slabtherm/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"slabtherm: stationary energy-resolved transport of interacting bosons in a disordered slab"};
  app.set_version_flag("--version", SLABTHERM_VERSION);
  app.require_subcommand(1);

  slabtherm::RunOptions opts;
  std::string out;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", opts.config_path, "configuration file (key = value lines)")
        ->required()
        ->check(CLI::ExistingFile);
    sub->add_option("--out", out, "output directory (overrides the config's 'out')");
    sub->add_option("--threads", opts.threads, "worker threads, 0 = all hardware threads")->capture_default_str();
    sub->add_option("--seed", seed, "Monte Carlo seed (overrides the config's 'seed')");
  };

  auto* solve = app.add_subcommand("solve", "solve the nonlinear stationary problem and write diagnostics");
  add_common(solve);
  auto* linear = app.add_subcommand("linear", "solve the non-interacting (alpha = 0) problem");
  add_common(linear);

  std::string which;
  auto* validate = app.add_subcommand("validate", "run a validator: kernels, walk or collision");
  validate->add_option("which", which, "validator name")
      ->required()
      ->check(CLI::IsMember({"kernels", "walk", "collision"}));
  add_common(validate);

  std::string param;
  std::vector<double> values;
  bool hold = false;
  auto* scan = app.add_subcommand("scan", "solve for a list of values of one parameter");
  scan->add_option("param", param, "parameter to scan")
      ->required()
      ->check(CLI::IsMember(slabtherm::scan_parameters()));
  scan->add_option("values", values, "values to scan")->required()->expected(1, -1);
  scan->add_flag("--hold-collisions", hold, "for b scans, keep b^2 alpha at the base config's value");
  add_common(scan);

  CLI11_PARSE(app, argc, argv);

  if (!out.empty()) opts.out_dir = out;
  for (auto* sub : {solve, linear, validate, scan})
    if (sub->count("--seed") > 0) opts.seed = seed;

  if (*solve) return slabtherm::cmd_solve(opts, std::cerr);
  if (*linear) return slabtherm::cmd_linear(opts, std::cerr);
  if (*validate) return slabtherm::cmd_validate(which, opts, std::cerr);
  return slabtherm::cmd_scan(param, values, hold, opts, std::cerr);
}
