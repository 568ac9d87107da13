// discrepancy-lab: experiment runner for the discrepancy-modeling framework.
//
//   discrepancy-lab run --config cfg.json [--epsilon 0.02 --seed 7 ...]
//   discrepancy-lab replicate fig4 --output-dir out/fig4
//   discrepancy-lab verify
//
// run/replicate exit 0 iff every grid cell completed. The worker pool size
// honors --threads / the config, capped by DISCREPANCY_LAB_THREADS.

#include <cstdio>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "disclab/errors.hpp"
#include "disclab/experiment.hpp"

namespace {

using disclab::experiment::ExperimentConfig;
using disclab::experiment::GridResult;

struct Overrides {
  std::optional<std::string> system;
  std::optional<double> epsilon, mu, t_split, dt;
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> output_dir;
  std::optional<bool> dump_trajectories;
};

void add_override_flags(CLI::App* cmd, Overrides* o) {
  cmd->add_option("--system", o->system, "Benchmark system (vanderpol|lorenz|burgers)");
  cmd->add_option("--epsilon", o->epsilon, "Missing-physics strength");
  cmd->add_option("--mu", o->mu, "Van der Pol nonlinearity parameter");
  cmd->add_option("--t-split", o->t_split, "Reconstruction/forecast split time (s)");
  cmd->add_option("--dt", o->dt, "Sampling step (s)");
  cmd->add_option("--seed", o->seed, "Global RNG seed");
  cmd->add_option("--threads", o->threads, "Worker pool size (0 = machine)");
  cmd->add_option("--output-dir", o->output_dir, "Output directory");
  cmd->add_option("--dump-trajectories", o->dump_trajectories,
                  "Write per-cell trajectory CSVs");
}

void apply(const Overrides& o, ExperimentConfig* config) {
  if (o.system) config->system = *o.system;
  if (o.epsilon) config->epsilon = *o.epsilon;
  if (o.mu) config->mu = *o.mu;
  if (o.t_split) config->t_split = *o.t_split;
  if (o.dt) config->dt = *o.dt;
  if (o.seed) config->seed = *o.seed;
  if (o.threads) config->threads = *o.threads;
  if (o.output_dir) config->output_dir = *o.output_dir;
  if (o.dump_trajectories) config->dump_trajectories = *o.dump_trajectories;
}

int execute(const ExperimentConfig& config) {
  config.validate();
  const GridResult grid = disclab::experiment::run_grid(config);
  const auto manifest = disclab::experiment::emit_outputs(grid, config.output_dir);

  for (const auto& cell : grid.cells) {
    std::printf("%-48s %s", cell.key.label(config.system).c_str(),
                cell.status.c_str());
    if (cell.status == "ok") {
      std::printf("  pct_recon=%8.3f  pct_fcst=%8.3f",
                  cell.report.pct_accuracy_increase_recon,
                  cell.report.pct_accuracy_increase_fcst);
    } else {
      std::printf("  (%s)", cell.error_kind.c_str());
    }
    std::printf("\n");
  }
  std::printf("wrote %zu file(s) under %s\n", manifest.size(),
              config.output_dir.c_str());
  const int failed = grid.failed_count();
  if (failed > 0) std::printf("%d cell(s) failed\n", failed);
  return failed == 0 ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Discrepancy-modeling experiment runner"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides run_overrides;
  auto* run = app.add_subcommand("run", "Run an experiment grid from a config");
  run->add_option("--config", config_path, "Experiment config (JSON)")
      ->required()
      ->check(CLI::ExistingFile);
  add_override_flags(run, &run_overrides);

  std::string figure;
  Overrides rep_overrides;
  auto* replicate =
      app.add_subcommand("replicate", "Run a preset grid (fig2..fig10)");
  replicate->add_option("figure", figure, "Figure preset name")->required();
  add_override_flags(replicate, &rep_overrides);

  app.add_subcommand("verify", "Run the method-level oracle suite");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      ExperimentConfig config = disclab::experiment::config_from_file(config_path);
      apply(run_overrides, &config);
      return execute(config);
    }
    if (replicate->parsed()) {
      ExperimentConfig config = disclab::experiment::replicate_preset(figure);
      apply(rep_overrides, &config);
      return execute(config);
    }
    return disclab::experiment::run_verify(std::cout) == 0 ? 0 : 1;
  } catch (const disclab::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
