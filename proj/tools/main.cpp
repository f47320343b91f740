// Command-line front end: train / eval / verify.

#include <cstdio>
#include <exception>
#include <string>

#include <CLI11.hpp>

#include "cbflearn/run.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Safe reinforcement learning with a learned class-K barrier filter"};
  app.require_subcommand(1);

  cbflearn::TrainOptions train_opts;
  CLI::App* train = app.add_subcommand("train", "Train a policy and kappa network per seed");
  train->add_option("--scenario", train_opts.scenario,
                    "Scenario name: optimality, stability or feasibility");
  train->add_option("--seeds", train_opts.seeds, "Number of independent seeds")
      ->check(CLI::PositiveNumber);
  train->add_option("--seed-base", train_opts.seed_base, "First seed value");
  int episodes = 0, steps = 0;
  train->add_option("--episodes", episodes, "Override the episode count (M)");
  train->add_option("--steps", steps, "Override the steps per episode (T)");
  train->add_option("--out", train_opts.out_dir, "Output directory");
  train->add_option("--config", train_opts.config_path, "Key-value overrides file")
      ->check(CLI::ExistingFile);
  train->add_flag("--baseline", train_opts.baseline,
                  "Also roll out the linear-kappa baseline agent");
  train->add_flag("--quiet", train_opts.quiet, "Suppress progress lines");

  cbflearn::EvalOptions eval_opts;
  CLI::App* eval = app.add_subcommand("eval", "Evaluate a checkpoint without exploration noise");
  eval->add_option("--checkpoint", eval_opts.checkpoint_path, "Checkpoint file")->required();
  eval->add_option("--rollouts", eval_opts.rollouts, "Number of evaluation rollouts")
      ->check(CLI::PositiveNumber);
  eval->add_option("--seed", eval_opts.seed, "Evaluation seed");
  eval->add_option("--out", eval_opts.out_dir, "Output directory");
  eval->add_flag("--export-kappa", eval_opts.export_kappa,
                 "Dump kappa(z) on a z in [-2, 2] grid for plotting");

  cbflearn::VerifyOptions verify_opts;
  CLI::App* verify = app.add_subcommand("verify", "Run the property suite");
  verify->add_flag("--quick", verify_opts.quick, "Reduced sample counts");
  verify->add_option("--seed", verify_opts.seed, "Oracle sampling seed");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);  // --help
    app.exit(e);
    return cbflearn::kExitUsage;
  }

  try {
    if (train->parsed()) {
      if (episodes > 0) train_opts.episodes = episodes;
      if (steps > 0) train_opts.steps = steps;
      return cbflearn::run_train(train_opts);
    }
    if (eval->parsed()) return cbflearn::run_eval(eval_opts);
    if (verify->parsed()) return cbflearn::run_verify(verify_opts);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return cbflearn::kExitNumeric;
  }
  return cbflearn::kExitUsage;
}
