#pragma once

#include <array>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cbflearn/ddpg.hpp"
#include "cbflearn/kappa.hpp"
#include "cbflearn/scenario.hpp"

namespace cbflearn {

struct EpisodeLog {
  std::vector<std::vector<double>> states;  // visited states, start included
  std::vector<std::array<double, 3>> nominal;
  std::vector<std::array<double, 3>> rectified;
  std::vector<double> rewards;
  std::vector<std::vector<double>> h_values;  // per action row, at the pre-action state
  std::vector<char> infeasible_flags;

  double goal_x = 0.0;
  double goal_y = 0.0;
  double h_min = 0.0;
  int violations = 0;        // states with min_h < 0
  int infeasible_steps = 0;  // steps whose filter had no feasible input
  bool reached = false;
  double return_value = 0.0;
  double path_length = 0.0;
};

// Produces the nominal (pre-filter) action for an observation row.
using NominalPolicy = std::function<Matrix(const std::vector<double>& obs)>;

// Rolls one episode: nominal action, min-norm rectification, Euler step.
// Deterministic given (policy, kappa, config, seed).
EpisodeLog rollout(const NominalPolicy& policy, const KappaFn& kappa, const ScenarioConfig& cfg,
                   std::uint64_t seed);

// Potential-descent nominal controller u = -k grad V, V = ||pos - goal||^2,
// mapped to the body frame and clipped to the box.
NominalPolicy baseline_policy(const ScenarioConfig& cfg);

// Convenience: baseline nominal + linear kappa(z) = alpha z.
EpisodeLog rollout_baseline(const ScenarioConfig& cfg, std::uint64_t seed);

// Trained-policy wrapper (zero exploration noise).
NominalPolicy actor_policy(const ActorNet& actor);

// One row per step: t, state components, nominal action, rectified action,
// reward, h per obstacle, infeasible flag.
void write_trajectory_csv(const std::string& path, const EpisodeLog& log,
                          const ScenarioConfig& cfg);

}  // namespace cbflearn
