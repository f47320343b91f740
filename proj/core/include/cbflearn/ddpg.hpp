#pragma once

#include <cstdint>
#include <vector>

#include "cbflearn/kappa.hpp"
#include "cbflearn/mlp.hpp"
#include "cbflearn/qp.hpp"
#include "cbflearn/replay.hpp"
#include "cbflearn/scenario.hpp"

namespace cbflearn {

// Deterministic policy with tanh-squashed output scaled into the control box.
struct ActorNet {
  Mlp net;
  Matrix u_lo;  // 1 x act_dim
  Matrix u_hi;  // 1 x act_dim

  static ActorNet make(const ScenarioConfig& cfg, Rng& rng);
  // Batch of observation rows -> batch of action rows, inside the box by
  // construction.
  Matrix act(const Matrix& obs) const;
  int forward_traced(Tape& tape, int obs_node, std::vector<int>* param_nodes) const;
  std::vector<Matrix*> params();
  std::vector<const Matrix*> params() const;
};

struct ActResult {
  Matrix a_nominal;    // 3 x 1
  Matrix a_rectified;  // 3 x 1
  bool infeasible = false;
  bool degenerate = false;
  RectifyResult rect;
};

struct EpisodeStats {
  double return_value = 0.0;
  double h_min = 0.0;
  bool reached = false;
  int violations = 0;
  int infeasible_steps = 0;
  int steps = 0;
};

struct TrainLog {
  std::vector<EpisodeStats> episodes;
  std::vector<double> wall_ms;  // measured, kept out of deterministic outputs
  long degenerate_skips = 0;
  long infeasible_events = 0;
};

struct UpdateDiagnostics {
  double actor_grad_inf = 0.0;
  double kappa_grad_inf = 0.0;
  int skipped = 0;  // batch rows dropped (infeasible filter or degenerate gradient)
};

// DDPG with the min-norm safety filter in the loop: the actor is explored,
// rectified and executed; actor and kappa updates differentiate through the
// filter's KKT system.
class Trainer {
 public:
  Trainer(const ScenarioConfig& cfg, std::uint64_t seed);

  // Noisy nominal action, clipped to the box, then rectified. On an
  // infeasible filter the fallback is the clamped nominal and the step is
  // flagged.
  ActResult act(const std::vector<double>& state, const std::vector<double>& obs,
                double noise_scale);

  // One Adam step on the mean squared TD error; returns the loss. Terminal
  // transitions bootstrap with y = R alone. Throws NumericalError on a
  // non-finite loss.
  double critic_update(const std::vector<std::size_t>& batch);

  // Ascends E[Q(s, rectify(mu(s)))] for both the actor and the kappa network,
  // chaining d(u_safe)/d(u_nominal) and d(u_safe)/d(h) through the QP.
  UpdateDiagnostics actor_kappa_update(const std::vector<std::size_t>& batch);

  void update_targets(double tau);

  EpisodeStats run_episode();
  TrainLog train();

  double noise_scale_at(long global_step) const;

  const ScenarioConfig& config() const { return cfg_; }
  ActorNet& actor() { return actor_; }
  const ActorNet& actor() const { return actor_; }
  ActorNet& actor_target() { return actor_target_; }
  Mlp& critic() { return critic_; }
  Mlp& critic_target() { return critic_target_; }
  KappaNet& kappa_net() { return kappa_; }
  const KappaNet& kappa_net() const { return kappa_; }
  Adam& actor_adam() { return actor_adam_; }
  Adam& critic_adam() { return critic_adam_; }
  Adam& kappa_adam() { return kappa_adam_; }
  ReplayBuffer& buffer() { return buffer_; }
  Rng& rng() { return rng_; }
  const Rng& rng() const { return rng_; }
  long episode() const { return episode_; }
  long global_step() const { return global_step_; }
  void set_counters(long episode, long global_step) {
    episode_ = episode;
    global_step_ = global_step;
  }
  long degenerate_skips() const { return degenerate_skips_; }
  long infeasible_events() const { return infeasible_events_; }

 private:
  void check_kappa_validity() const;

  ScenarioConfig cfg_;
  Rng rng_;
  ActorNet actor_, actor_target_;
  Mlp critic_, critic_target_;
  KappaNet kappa_;
  Adam actor_adam_, critic_adam_, kappa_adam_;
  ReplayBuffer buffer_;
  long episode_ = 0;
  long global_step_ = 0;
  long degenerate_skips_ = 0;
  long infeasible_events_ = 0;
};

}  // namespace cbflearn
