#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cbflearn/barrier.hpp"
#include "cbflearn/cbf.hpp"
#include "cbflearn/dynamics.hpp"
#include "cbflearn/rng.hpp"

namespace cbflearn {

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Everything needed to reproduce a benchmark run: geometry, reward constants,
// control bounds, episode limits, and the learner hyper-parameters.
struct ScenarioConfig {
  std::string name = "optimality";
  int order = 1;  // 1 or 2
  std::vector<Obstacle> obstacles;

  // Start/goal samplers: nominal point plus uniform jitter on [0, jitter].
  double start_x = -1.5, start_y = -1.5, start_theta = M_PI / 4.0;
  double goal_x = 1.5, goal_y = 1.5, goal_theta = M_PI / 4.0;
  double jitter = 0.5;

  double d_penalty = 0.6;     // distance penalty
  double b_penalty = 0.1;     // velocity penalty (second order)
  double step_penalty = 1.0;  // per-step penalty
  double gamma = 0.99;

  double u_max = 1.0;    // order 1: box half-width; order 2: planar norm bound
  double tau_max = 1.0;  // order 2: |tau_c| bound
  double dt = 0.02;
  int steps_per_episode = 200;  // T
  int episodes = 300;           // M
  double goal_radius = 0.1;

  // Safety-filter constants.
  double a1 = 1.0;              // inner linear class-K gain of the order-2 chain
  double kappa_lambda0 = 0.01;  // strictness bypass of the learned kappa
  int kappa_hidden = 7;

  // Baseline comparison: linear kappa(z) = alpha z with a potential-descent
  // nominal controller of gain k.
  double baseline_alpha = 1.0;
  double baseline_gain = 1.0;

  // DDPG hyper-parameters.
  int batch_size = 64;
  double actor_lr = 0.001;
  double critic_lr = 0.01;
  double target_tau = 0.7;
  double noise_start = 0.3;
  double noise_end = 0.05;
  std::size_t buffer_capacity = 100000;
  int hidden1 = 128;
  int hidden2 = 64;

  std::size_t state_dim() const { return order == 1 ? 3 : 6; }
  std::size_t obs_dim() const { return state_dim() + 2; }
  ControlSet control_set() const;
  void validate() const;
};

// The three benchmark scenarios. Throws ConfigError on an unknown name.
//   optimality:  first order, one circular obstacle on the start-goal line.
//   stability:   first order, two overlapping circles whose notch faces the
//                start and traps greedy potential descent.
//   feasibility: second order with a norm-bounded input small enough that
//                late avoidance is infeasible.
ScenarioConfig make_scenario(const std::string& name);

// R = -d ||pos - goal||^2 - s (positions only).
double reward1(const State1& s, double gx, double gy, const ScenarioConfig& cfg);
// R = -d ||pos - goal||^2 - b ||v||^2 - s (goal velocity is zero).
double reward2(const State2& s, double gx, double gy, const ScenarioConfig& cfg);

struct EpisodeSetup {
  std::vector<double> start_state;  // state_dim entries
  double goal_x = 0.0;
  double goal_y = 0.0;
};

// Rejection-samples start and goal outside all obstacles.
EpisodeSetup sample_episode(const ScenarioConfig& cfg, Rng& rng);

// Observation fed to the learner: raw state followed by the goal offset
// (gx - x, gy - y).
std::vector<double> observe(const ScenarioConfig& cfg, const std::vector<double>& state,
                            double gx, double gy);

// Dispatch helpers over the generic state vector.
std::vector<double> step_state(const ScenarioConfig& cfg, const std::vector<double>& state,
                               const Matrix& u);
double min_barrier(const ScenarioConfig& cfg, const std::vector<double>& state);
std::vector<double> barrier_values(const ScenarioConfig& cfg, const std::vector<double>& state);
double goal_distance(const std::vector<double>& state, double gx, double gy);
double reward_of(const ScenarioConfig& cfg, const std::vector<double>& state, double gx, double gy);

// CBF rows + control-set rows for the current state under the given kappa.
ConstraintSet assemble_constraints(const ScenarioConfig& cfg, const std::vector<double>& state,
                                   const KappaFn& kappa, bool trace = false);

}  // namespace cbflearn
