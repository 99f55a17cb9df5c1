#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace mfrelax;

int main(int argc, char** argv) {
  CLI::App app{"Magneto-frictional relaxation with structure-preserving finite elements"};
  app.require_subcommand(1);

  std::string config_path;
  std::string preset_name;
  std::string out_dir;
  int steps = -1;
  std::string seed_file;
  std::string restart;
  std::string checkpoint;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON run configuration");
    sub->add_option("--preset", preset_name, "embedded preset")
        ->check(CLI::IsMember(cli::preset_names()));
    sub->add_option("--out", out_dir, "output directory");
  };

  CLI::App* verify = app.add_subcommand("verify", "check exactness of the discrete complex");
  CLI::App* run = app.add_subcommand("run", "time-step a configuration");
  CLI::App* trace = app.add_subcommand("trace", "trace field lines of a face-space field");
  CLI::App* poincare = app.add_subcommand("poincare", "estimate the discrete Arnold constant");
  for (CLI::App* sub : {verify, run, trace, poincare}) add_common(sub);
  run->add_option("--steps", steps, "number of steps (overrides t_final)")->check(CLI::NonNegativeNumber);
  run->add_option("--restart", restart, "resume from a checkpoint");
  trace->add_option("--seed-file", seed_file, "seed points, one 'x y z' per line");
  trace->add_option("--checkpoint", checkpoint, "field to trace (default: the initial condition)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (config_path.empty() == preset_name.empty()) {
      std::cerr << "exactly one of --config or --preset is required\n";
      return 2;
    }
    cli::RunConfig cfg = preset_name.empty() ? cli::load_config(config_path) : cli::preset(preset_name);
    if (!out_dir.empty()) cfg.out_dir = out_dir;

    if (verify->parsed()) return cli::cmd_verify(cfg, std::cout);
    if (poincare->parsed()) return cli::cmd_poincare(cfg, std::cout);
    if (run->parsed()) {
      cli::RunOptions opt;
      if (steps >= 0) opt.steps = steps;
      if (!restart.empty()) opt.restart = restart;
      return cli::cmd_run(cfg, opt, std::cout, std::cerr);
    }
    cli::TraceOptions opt;
    if (!checkpoint.empty()) opt.checkpoint = checkpoint;
    if (!seed_file.empty()) opt.seed_file = seed_file;
    return cli::cmd_trace(cfg, opt, std::cout, std::cerr);
  } catch (const cli::ConfigError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
}
