#include "cbflearn/rollout.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cbflearn {

EpisodeLog rollout(const NominalPolicy& policy, const KappaFn& kappa, const ScenarioConfig& cfg,
                   std::uint64_t seed) {
  Rng rng(seed);
  const EpisodeSetup setup = sample_episode(cfg, rng);
  const ControlSet control_set = cfg.control_set();

  EpisodeLog log;
  log.goal_x = setup.goal_x;
  log.goal_y = setup.goal_y;

  std::vector<double> state = setup.start_state;
  log.states.push_back(state);
  log.h_min = min_barrier(cfg, state);
  if (log.h_min < 0.0) ++log.violations;

  double discount = 1.0;
  for (int t = 0; t < cfg.steps_per_episode; ++t) {
    const std::vector<double> obs = observe(cfg, state, setup.goal_x, setup.goal_y);
    Matrix u_nom = policy(obs);
    if (u_nom.rows() != 3 || u_nom.cols() != 1)
      throw std::invalid_argument("rollout: policy must return a 3x1 control");
    for (std::size_t j = 0; j < 3; ++j)
      u_nom(j, 0) = std::min(std::max(u_nom(j, 0), control_set.box.lo(j, 0)),
                             control_set.box.hi(j, 0));

    const ConstraintSet cs = assemble_constraints(cfg, state, kappa, false);
    const RectifyResult rect = rectify(u_nom, cs.G, cs.h, control_set);
    const bool infeasible = rect.status != QPStatus::kOptimal;

    log.h_values.push_back(barrier_values(cfg, state));
    log.nominal.push_back({u_nom(0, 0), u_nom(1, 0), u_nom(2, 0)});
    log.rectified.push_back({rect.u_safe(0, 0), rect.u_safe(1, 0), rect.u_safe(2, 0)});
    log.infeasible_flags.push_back(infeasible ? 1 : 0);
    if (infeasible) ++log.infeasible_steps;

    const std::vector<double> next = step_state(cfg, state, rect.u_safe);
    const double r = reward_of(cfg, next, setup.goal_x, setup.goal_y);
    log.rewards.push_back(r);
    log.return_value += discount * r;
    discount *= cfg.gamma;
    log.path_length += std::hypot(next[0] - state[0], next[1] - state[1]);

    const double h = min_barrier(cfg, next);
    log.h_min = std::min(log.h_min, h);
    if (h < 0.0) ++log.violations;

    state = next;
    log.states.push_back(state);
    if (goal_distance(state, setup.goal_x, setup.goal_y) < cfg.goal_radius) {
      log.reached = true;
      break;
    }
  }
  return log;
}

NominalPolicy baseline_policy(const ScenarioConfig& cfg) {
  const double gain = cfg.baseline_gain;
  return [cfg, gain](const std::vector<double>& obs) {
    const double theta = obs[2];
    const double rel_x = obs[cfg.state_dim()];
    const double rel_y = obs[cfg.state_dim() + 1];
    //  -k grad V = 2 k (goal - pos), rotated into the body frame.
    const double wx = 2.0 * gain * rel_x;
    const double wy = 2.0 * gain * rel_y;
    const double c = std::cos(theta);
    const double s = std::sin(theta);
    Matrix u(3, 1);
    u(0, 0) = c * wx + s * wy;
    u(1, 0) = -s * wx + c * wy;
    u(2, 0) = 0.0;
    return u;
  };
}

EpisodeLog rollout_baseline(const ScenarioConfig& cfg, std::uint64_t seed) {
  const LinearKappa kappa(cfg.baseline_alpha);
  return rollout(baseline_policy(cfg), kappa, cfg, seed);
}

NominalPolicy actor_policy(const ActorNet& actor) {
  return [&actor](const std::vector<double>& obs) {
    const Matrix a = actor.act(Matrix::row_from(obs));
    return a.transposed();
  };
}

void write_trajectory_csv(const std::string& path, const EpisodeLog& log,
                          const ScenarioConfig& cfg) {
  std::FILE* f = std::fopen(path.c_str(), "w");
  if (!f) throw std::runtime_error("write_trajectory_csv: cannot open " + path);

  std::fprintf(f, "t");
  if (cfg.order == 1) {
    std::fprintf(f, ",x,y,theta");
  } else {
    std::fprintf(f, ",x,y,theta,vx,vy,omega");
  }
  std::fprintf(f, ",unom_0,unom_1,unom_2,urect_0,urect_1,urect_2,reward");
  for (std::size_t k = 0; k < cfg.obstacles.size(); ++k)
    std::fprintf(f, ",h_%zu", k);
  std::fprintf(f, ",infeasible\n");

  for (std::size_t t = 0; t < log.nominal.size(); ++t) {
    std::fprintf(f, "%zu", t);
    for (double v : log.states[t]) std::fprintf(f, ",%.17g", v);
    for (double v : log.nominal[t]) std::fprintf(f, ",%.17g", v);
    for (double v : log.rectified[t]) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, ",%.17g", log.rewards[t]);
    for (double v : log.h_values[t]) std::fprintf(f, ",%.17g", v);
    std::fprintf(f, ",%d\n", log.infeasible_flags[t] ? 1 : 0);
  }
  std::fclose(f);
}

}  // namespace cbflearn
