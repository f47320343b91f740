#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace cbflearn {

// Exit codes shared by the CLI commands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 2;
inline constexpr int kExitNumeric = 3;
inline constexpr int kExitPropertyFailure = 4;

// Root for outputs when --out is not given; overridable through the
// CBFLEARN_OUT environment variable.
std::string default_output_root();

struct TrainOptions {
  std::string scenario = "optimality";
  int seeds = 3;
  std::uint64_t seed_base = 1;
  std::optional<int> episodes;
  std::optional<int> steps;
  std::string out_dir;      // empty: <output root>/<scenario>
  std::string config_path;  // optional key-value overrides file
  bool baseline = false;
  bool quiet = false;
};

// Trains one learner per seed (concurrent workers, disjoint outputs), writes
// the manifest before training, per-seed metrics/checkpoints after.
int run_train(const TrainOptions& options);

struct EvalOptions {
  std::string checkpoint_path;
  int rollouts = 5;
  std::uint64_t seed = 1;
  std::string out_dir;
  bool export_kappa = false;
};

// Loads a checkpoint and produces noise-free trajectory exports plus a
// summary (mean return, reach rate, min h).
int run_eval(const EvalOptions& options);

struct VerifyOptions {
  bool quick = false;
  std::uint64_t seed = 12345;
};

// Runs the property suite, printing one pass/fail line per property.
int run_verify(const VerifyOptions& options);

}  // namespace cbflearn
