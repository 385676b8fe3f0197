// Command-line front end: run, diagnose, profile, gen-rosenbrock.

#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dropal/commands.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Dropout-uncertainty active learning for regression"};
  app.set_version_flag("--version", dropal::kEngineVersion);
  app.require_subcommand(1);

  dropal::RunOptions run;
  std::string run_out;
  std::size_t run_jobs = 0;
  auto* run_cmd = app.add_subcommand("run", "Run an active-learning experiment from a config file");
  run_cmd->add_option("config", run.config, "Config JSON (or a previous run's manifest.json)")
      ->required();
  run_cmd->add_option("-o,--out", run_out, "Output directory");
  run_cmd->add_option("-j,--jobs", run_jobs, "Replicates run in parallel");
  run_cmd->add_option("--set", run.overrides, "Override a config key, e.g. training.base_epochs=500");

  dropal::DiagnoseOptions diag;
  std::string delim = ",";
  std::optional<double> dropout;
  auto* diag_cmd = app.add_subcommand("diagnose", "MC-dropout std versus absolute error on a dataset");
  diag_cmd->add_option("checkpoint", diag.checkpoint, "Network checkpoint")->required();
  diag_cmd->add_option("dataset", diag.dataset, "Labelled CSV")->required();
  diag_cmd->add_option("--target", diag.target, "Target column name");
  diag_cmd->add_option("--delimiter", delim, "CSV delimiter");
  diag_cmd->add_option("--t", diag.runs, "Stochastic passes per point (>= 2)");
  diag_cmd->add_option("--pi", dropout, "Dropout probability (default: the network's)");
  diag_cmd->add_option("--seed", diag.seed, "Base seed of the MC streams");
  diag_cmd->add_option("-o,--out", diag.out_dir, "Output directory");

  dropal::ProfileOptions prof;
  auto* prof_cmd = app.add_subcommand("profile", "Dolan-More performance profile across result files");
  prof_cmd->add_option("inputs", prof.inputs, "metrics.csv or q-table files / glob patterns")
      ->required();
  prof_cmd->add_option("--metric", prof.metric, "rmse, mae or maxae");
  prof_cmd->add_option("--points", prof.tau_points, "Number of tau grid points");
  prof_cmd->add_option("-o,--out", prof.out_dir, "Output directory");

  dropal::GenRosenbrockOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-rosenbrock", "Write a synthetic Rosenbrock dataset as CSV");
  gen_cmd->add_option("-n,--samples", gen.spec.samples, "Number of samples");
  gen_cmd->add_option("-d,--dim", gen.spec.dim, "Input dimension (>= 2)");
  gen_cmd->add_option("--lo", gen.spec.lo, "Lower box bound");
  gen_cmd->add_option("--hi", gen.spec.hi, "Upper box bound");
  gen_cmd->add_option("--seed", gen.spec.seed, "Sampling seed");
  gen_cmd->add_option("-o,--out", gen.out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : dropal::kExitUsage;
  }

  if (*run_cmd) {
    if (!run_out.empty()) run.out_dir = run_out;
    if (run_jobs > 0) run.jobs = run_jobs;
    return dropal::cmd_run(run, std::cout, std::cerr);
  }
  if (*diag_cmd) {
    if (delim.size() != 1) {
      std::cerr << "error: --delimiter must be a single character\n";
      return dropal::kExitUsage;
    }
    diag.delimiter = delim[0];
    diag.dropout = dropout;
    return dropal::cmd_diagnose(diag, std::cout, std::cerr);
  }
  if (*prof_cmd) return dropal::cmd_profile(prof, std::cout, std::cerr);
  return dropal::cmd_gen_rosenbrock(gen, std::cout, std::cerr);
}
