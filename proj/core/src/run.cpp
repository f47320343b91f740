#include "cbflearn/run.hpp"

#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "cbflearn/checkpoint.hpp"
#include "cbflearn/config.hpp"
#include "cbflearn/ddpg.hpp"
#include "cbflearn/rollout.hpp"
#include "cbflearn/verify.hpp"

namespace cbflearn {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string iso_timestamp() {
  const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  char buf[32];
  std::tm tm_utc{};
  gmtime_r(&now, &tm_utc);
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);
  return buf;
}

std::string hex_u64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

void write_text_file(const std::string& path, const std::string& text) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot open for writing: " + path);
  out << text;
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open for reading: " + path);
  std::string text((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return text;
}

void write_metrics_csv(const std::string& path, const std::vector<EpisodeStats>& episodes) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "episode,return,h_min,reached,violations\n");
  for (std::size_t i = 0; i < episodes.size(); ++i) {
    const EpisodeStats& e = episodes[i];
    std::fprintf(f, "%zu,%.17g,%.17g,%d,%d\n", i, e.return_value, e.h_min, e.reached ? 1 : 0,
                 e.violations);
  }
  std::fclose(f);
}

void write_timing_csv(const std::string& path, const std::vector<double>& wall_ms) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("cannot open " + path);
  std::fprintf(f, "episode,wall_ms\n");
  for (std::size_t i = 0; i < wall_ms.size(); ++i) std::fprintf(f, "%zu,%.6f\n", i, wall_ms[i]);
  std::fclose(f);
}

EpisodeStats stats_from_log(const EpisodeLog& log) {
  EpisodeStats s;
  s.return_value = log.return_value;
  s.h_min = log.h_min;
  s.reached = log.reached;
  s.violations = log.violations;
  s.infeasible_steps = log.infeasible_steps;
  s.steps = static_cast<int>(log.rewards.size());
  return s;
}

}  // namespace

std::string default_output_root() {
  if (const char* env = std::getenv("CBFLEARN_OUT")) return env;
  return "runs";
}

int run_train(const TrainOptions& options) {
  ScenarioConfig cfg;
  try {
    cfg = make_scenario(options.scenario);
    if (!options.config_path.empty())
      apply_overrides(cfg, parse_config_text(read_text_file(options.config_path)));
    if (options.episodes) cfg.episodes = *options.episodes;
    if (options.steps) cfg.steps_per_episode = *options.steps;
    cfg.validate();
  } catch (const std::exception& e) {
    std::fprintf(stderr, "train: %s\n", e.what());
    return kExitUsage;
  }
  if (options.seeds <= 0) {
    std::fprintf(stderr, "train: --seeds must be positive\n");
    return kExitUsage;
  }

  const ConfigMap resolved = config_map(cfg);
  const std::string config_text = serialize_config_text(resolved);
  const std::uint64_t config_hash = fnv1a_hash(config_text);

  const fs::path out_dir = options.out_dir.empty()
                               ? fs::path(default_output_root()) / options.scenario
                               : fs::path(options.out_dir);
  fs::create_directories(out_dir);

  json manifest;
  manifest["command"] = "train";
  manifest["scenario"] = options.scenario;
  manifest["version"] = toolkit_version();
  manifest["config"] = resolved;
  manifest["config_hash"] = hex_u64(config_hash);
  manifest["started"] = iso_timestamp();
  manifest["finished"] = nullptr;
  std::vector<std::uint64_t> seeds;
  for (int k = 0; k < options.seeds; ++k) seeds.push_back(options.seed_base + static_cast<std::uint64_t>(k));
  manifest["seeds"] = seeds;

  std::vector<std::string> artifacts;
  artifacts.push_back((out_dir / "config.txt").string());
  for (std::uint64_t seed : seeds) {
    const fs::path sd = out_dir / ("seed" + std::to_string(seed));
    artifacts.push_back((sd / "metrics.csv").string());
    artifacts.push_back((sd / "timing.csv").string());
    artifacts.push_back((sd / "checkpoint.txt").string());
    if (options.baseline) artifacts.push_back((sd / "baseline_metrics.csv").string());
  }
  manifest["artifacts"] = artifacts;
  write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  write_text_file((out_dir / "config.txt").string(), config_text);

  std::vector<std::string> errors(seeds.size());
  auto worker = [&](std::size_t idx) {
    const std::uint64_t seed = seeds[idx];
    const fs::path sd = out_dir / ("seed" + std::to_string(seed));
    try {
      fs::create_directories(sd);
      Trainer trainer(cfg, seed);
      const TrainLog log = trainer.train();
      write_metrics_csv((sd / "metrics.csv").string(), log.episodes);
      write_timing_csv((sd / "timing.csv").string(), log.wall_ms);
      save_checkpoint((sd / "checkpoint.txt").string(), trainer);
      if (options.baseline) {
        std::vector<EpisodeStats> baseline_rows;
        baseline_rows.reserve(static_cast<std::size_t>(cfg.episodes));
        for (int m = 0; m < cfg.episodes; ++m) {
          const std::uint64_t episode_seed = seed * 1000003ull + static_cast<std::uint64_t>(m);
          baseline_rows.push_back(stats_from_log(rollout_baseline(cfg, episode_seed)));
        }
        write_metrics_csv((sd / "baseline_metrics.csv").string(), baseline_rows);
      }
      if (!options.quiet)
        std::fprintf(stderr, "[train] seed %llu done (%d episodes)\n",
                     static_cast<unsigned long long>(seed), cfg.episodes);
    } catch (const std::exception& e) {
      errors[idx] = e.what();
    }
  };

  std::vector<std::thread> threads;
  threads.reserve(seeds.size());
  for (std::size_t idx = 0; idx < seeds.size(); ++idx) threads.emplace_back(worker, idx);
  for (std::thread& t : threads) t.join();

  manifest["finished"] = iso_timestamp();
  write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");

  for (std::size_t idx = 0; idx < seeds.size(); ++idx) {
    if (!errors[idx].empty()) {
      const fs::path diag = out_dir / "diagnostic.txt";
      write_text_file(diag.string(), "seed " + std::to_string(seeds[idx]) + ": " + errors[idx] + "\n");
      std::fprintf(stderr, "train: numeric abort, see %s\n", diag.string().c_str());
      return kExitNumeric;
    }
  }
  return kExitOk;
}

int run_eval(const EvalOptions& options) {
  LoadedCheckpoint loaded;
  try {
    loaded = load_checkpoint(options.checkpoint_path);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "eval: %s\n", e.what());
    return kExitUsage;
  }
  if (options.rollouts <= 0) {
    std::fprintf(stderr, "eval: --rollouts must be positive\n");
    return kExitUsage;
  }
  const Trainer& trainer = *loaded.trainer;
  const ScenarioConfig& cfg = trainer.config();

  const fs::path out_dir = options.out_dir.empty()
                               ? fs::path(default_output_root()) / (cfg.name + "_eval")
                               : fs::path(options.out_dir);
  fs::create_directories(out_dir);

  json manifest;
  manifest["command"] = "eval";
  manifest["scenario"] = cfg.name;
  manifest["version"] = toolkit_version();
  manifest["config"] = config_map(cfg);
  manifest["config_hash"] = hex_u64(loaded.config_hash);
  manifest["checkpoint"] = options.checkpoint_path;
  manifest["seeds"] = std::vector<std::uint64_t>{options.seed};
  manifest["started"] = iso_timestamp();
  manifest["finished"] = nullptr;

  std::vector<std::string> artifacts;
  for (int i = 0; i < options.rollouts; ++i)
    artifacts.push_back((out_dir / ("trajectory_" + std::to_string(i) + ".csv")).string());
  artifacts.push_back((out_dir / "summary.csv").string());
  if (options.export_kappa) artifacts.push_back((out_dir / "kappa_grid.csv").string());
  manifest["artifacts"] = artifacts;
  write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");

  const NominalPolicy policy = actor_policy(trainer.actor());
  double return_sum = 0.0;
  int reached = 0;
  double min_h = 1e300;
  for (int i = 0; i < options.rollouts; ++i) {
    const EpisodeLog log =
        rollout(policy, trainer.kappa_net(), cfg, options.seed + static_cast<std::uint64_t>(i));
    write_trajectory_csv((out_dir / ("trajectory_" + std::to_string(i) + ".csv")).string(), log,
                         cfg);
    return_sum += log.return_value;
    reached += log.reached ? 1 : 0;
    min_h = std::min(min_h, log.h_min);
  }

  {
    std::FILE* f = std::fopen((out_dir / "summary.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("eval: cannot open summary.csv");
    std::fprintf(f, "rollouts,mean_return,reach_rate,min_h\n");
    std::fprintf(f, "%d,%.17g,%.17g,%.17g\n", options.rollouts,
                 return_sum / options.rollouts,
                 static_cast<double>(reached) / options.rollouts, min_h);
    std::fclose(f);
  }

  if (options.export_kappa) {
    std::FILE* f = std::fopen((out_dir / "kappa_grid.csv").string().c_str(), "w");
    if (!f) throw std::runtime_error("eval: cannot open kappa_grid.csv");
    std::fprintf(f, "z,kappa\n");
    const int points = 401;
    for (int i = 0; i < points; ++i) {
      const double z = -2.0 + 4.0 * i / (points - 1);
      std::fprintf(f, "%.17g,%.17g\n", z, trainer.kappa_net().eval(z));
    }
    std::fclose(f);
  }

  manifest["finished"] = iso_timestamp();
  write_text_file((out_dir / "manifest.json").string(), manifest.dump(2) + "\n");
  return kExitOk;
}

int run_verify(const VerifyOptions& options) {
  VerifySettings settings;
  settings.quick = options.quick;
  settings.seed = options.seed;
  const std::vector<PropertyResult> results = run_property_suite(settings);
  bool all_passed = true;
  for (const PropertyResult& r : results) {
    std::printf("[%s] %s (%s)\n", r.passed ? " ok " : "FAIL", r.name.c_str(), r.detail.c_str());
    all_passed = all_passed && r.passed;
  }
  std::printf("%zu properties, %s\n", results.size(), all_passed ? "all passed" : "FAILURES");
  return all_passed ? kExitOk : kExitPropertyFailure;
}

}  // namespace cbflearn
