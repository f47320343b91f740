#include "cbflearn/ddpg.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace cbflearn {

ActorNet ActorNet::make(const ScenarioConfig& cfg, Rng& rng) {
  ActorNet a;
  a.net = Mlp::make({cfg.obs_dim(), static_cast<std::size_t>(cfg.hidden1),
                     static_cast<std::size_t>(cfg.hidden2), 3},
                    rng);
  const ControlSet set = cfg.control_set();
  a.u_lo = set.box.lo.transposed();
  a.u_hi = set.box.hi.transposed();
  return a;
}

Matrix ActorNet::act(const Matrix& obs) const {
  Matrix y = net.forward(obs);
  for (std::size_t i = 0; i < y.rows(); ++i) {
    double* yi = y.row_ptr(i);
    for (std::size_t j = 0; j < y.cols(); ++j) {
      const double t = std::tanh(yi[j]);
      yi[j] = u_lo[j] + 0.5 * (t + 1.0) * (u_hi[j] - u_lo[j]);
    }
  }
  return y;
}

int ActorNet::forward_traced(Tape& tape, int obs_node, std::vector<int>* param_nodes) const {
  const int y = net.forward_traced(tape, obs_node, param_nodes);
  const int t01 = tape.affine(tape.tanh(y), 0.5, 0.5);
  const int span = tape.leaf(u_hi - u_lo);
  const int lo = tape.leaf(u_lo);
  return tape.add_row(tape.mul_row(t01, span), lo);
}

std::vector<Matrix*> ActorNet::params() { return net.params(); }
std::vector<const Matrix*> ActorNet::params() const {
  return static_cast<const Mlp&>(net).params();
}

namespace {

Matrix concat_cols(const Matrix& a, const Matrix& b) {
  Matrix out(a.rows(), a.cols() + b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    double* oi = out.row_ptr(i);
    const double* ai = a.row_ptr(i);
    for (std::size_t j = 0; j < a.cols(); ++j) oi[j] = ai[j];
    const double* bi = b.row_ptr(i);
    for (std::size_t j = 0; j < b.cols(); ++j) oi[a.cols() + j] = bi[j];
  }
  return out;
}

std::vector<Matrix> grads_from_adjoints(const std::vector<Matrix>& adj,
                                        const std::vector<int>& param_nodes) {
  std::vector<Matrix> out;
  out.reserve(param_nodes.size());
  for (int id : param_nodes) out.push_back(adj[static_cast<std::size_t>(id)]);
  return out;
}

}  // namespace

Trainer::Trainer(const ScenarioConfig& cfg, std::uint64_t seed)
    : cfg_(cfg), rng_(seed), buffer_(cfg.buffer_capacity) {
  cfg_.validate();
  actor_ = ActorNet::make(cfg_, rng_);
  critic_ = Mlp::make({cfg_.obs_dim() + 3, static_cast<std::size_t>(cfg_.hidden1),
                       static_cast<std::size_t>(cfg_.hidden2), 1},
                      rng_);
  kappa_ = KappaNet::make(static_cast<std::size_t>(cfg_.kappa_hidden), cfg_.kappa_lambda0, rng_);
  actor_target_ = actor_;
  critic_target_ = critic_;
  actor_adam_.init_like(actor_.params());
  critic_adam_.init_like(critic_.params());
  kappa_adam_.init_like(kappa_.params());
}

double Trainer::noise_scale_at(long global_step) const {
  const double total = static_cast<double>(cfg_.episodes) * cfg_.steps_per_episode;
  const double frac = total <= 1.0 ? 1.0 : std::min(1.0, static_cast<double>(global_step) / total);
  return cfg_.noise_start + frac * (cfg_.noise_end - cfg_.noise_start);
}

ActResult Trainer::act(const std::vector<double>& state, const std::vector<double>& obs,
                       double noise_scale) {
  ActResult out;
  Matrix obs_row = Matrix::row_from(obs);
  Matrix a = actor_.act(obs_row);  // 1 x 3
  out.a_nominal = Matrix(3, 1);
  for (std::size_t j = 0; j < 3; ++j) {
    double v = a(0, j) + noise_scale * rng_.normal();
    v = std::min(std::max(v, actor_.u_lo[j]), actor_.u_hi[j]);
    out.a_nominal(j, 0) = v;
  }
  const ConstraintSet cs = assemble_constraints(cfg_, state, kappa_, false);
  out.rect = rectify(out.a_nominal, cs.G, cs.h, cfg_.control_set());
  out.a_rectified = out.rect.u_safe;
  out.infeasible = out.rect.status == QPStatus::kInfeasible;
  out.degenerate = out.rect.status == QPStatus::kDegenerate;
  return out;
}

double Trainer::critic_update(const std::vector<std::size_t>& batch) {
  const std::size_t bsz = batch.size();
  if (bsz == 0) throw std::invalid_argument("critic_update: empty batch");
  const std::size_t od = cfg_.obs_dim();

  Matrix obs(bsz, od), obs_next(bsz, od), act_exec(bsz, 3), y(bsz, 1);
  std::vector<double> rewards(bsz);
  std::vector<char> done(bsz);
  for (std::size_t i = 0; i < bsz; ++i) {
    const Transition& t = buffer_.at(batch[i]);
    for (std::size_t j = 0; j < od; ++j) {
      obs(i, j) = t.obs[j];
      obs_next(i, j) = t.obs_next[j];
    }
    for (std::size_t j = 0; j < 3; ++j) act_exec(i, j) = t.a_rectified[j];
    rewards[i] = t.reward;
    done[i] = t.done ? 1 : 0;
  }

  // Bootstrapped target from the next state and target networks.
  const Matrix a_next = actor_target_.act(obs_next);
  const Matrix q_next = critic_target_.forward(concat_cols(obs_next, a_next));
  for (std::size_t i = 0; i < bsz; ++i)
    y(i, 0) = rewards[i] + (done[i] ? 0.0 : cfg_.gamma * q_next(i, 0));

  Tape tape;
  const int x = tape.leaf(concat_cols(obs, act_exec));
  std::vector<int> param_nodes;
  const int q_pred = critic_.forward_traced(tape, x, &param_nodes);
  const int diff = tape.sub(q_pred, tape.leaf(y));
  const int loss_node = tape.affine(tape.sum_squares(diff), 1.0 / static_cast<double>(bsz), 0.0);
  const double loss = tape.value(loss_node)(0, 0);
  if (!std::isfinite(loss))
    throw NumericalError("critic_update: non-finite TD loss at episode " +
                         std::to_string(episode_) + ", step " + std::to_string(global_step_));

  const std::vector<Matrix> adj = tape.backward(loss_node);
  critic_adam_.step(critic_.params(), grads_from_adjoints(adj, param_nodes), cfg_.critic_lr);
  return loss;
}

UpdateDiagnostics Trainer::actor_kappa_update(const std::vector<std::size_t>& batch) {
  UpdateDiagnostics diag;
  const std::size_t bsz = batch.size();
  if (bsz == 0) throw std::invalid_argument("actor_kappa_update: empty batch");
  const std::size_t od = cfg_.obs_dim();
  const std::size_t sd = cfg_.state_dim();

  Matrix obs(bsz, od);
  for (std::size_t i = 0; i < bsz; ++i) {
    const Transition& t = buffer_.at(batch[i]);
    for (std::size_t j = 0; j < od; ++j) obs(i, j) = t.obs[j];
  }

  Tape actor_tape;
  const int obs_node = actor_tape.leaf(obs);
  std::vector<int> actor_param_nodes;
  const int u_node = actor_.forward_traced(actor_tape, obs_node, &actor_param_nodes);
  const Matrix& u_nom = actor_tape.value(u_node);

  // Per-sample rectification at the current policy and kappa.
  const ControlSet control_set = cfg_.control_set();
  std::vector<ConstraintSet> sets(bsz);
  std::vector<RectifyResult> rects(bsz);
  std::vector<char> valid(bsz, 0);
  Matrix u_safe(bsz, 3);
  Matrix mask(bsz, 1);
  std::size_t n_valid = 0;
  std::vector<double> state(sd);
  for (std::size_t i = 0; i < bsz; ++i) {
    for (std::size_t j = 0; j < sd; ++j) state[j] = obs(i, j);
    sets[i] = assemble_constraints(cfg_, state, kappa_, true);
    Matrix u(3, 1);
    for (std::size_t j = 0; j < 3; ++j) u(j, 0) = u_nom(i, j);
    rects[i] = rectify(u, sets[i].G, sets[i].h, control_set);
    valid[i] = rects[i].status == QPStatus::kOptimal ? 1 : 0;
    if (valid[i]) {
      ++n_valid;
      mask(i, 0) = 1.0;
    } else {
      ++diag.skipped;
    }
    for (std::size_t j = 0; j < 3; ++j) u_safe(i, j) = rects[i].u_safe(j, 0);
  }
  if (n_valid == 0) return diag;

  // Critic pass over (obs, u_safe); maximize the masked mean Q.
  Tape critic_tape;
  const int x_node = critic_tape.leaf(concat_cols(obs, u_safe));
  std::vector<int> critic_param_nodes;
  const int q_node = critic_.forward_traced(critic_tape, x_node, &critic_param_nodes);
  const int masked = critic_tape.mul(q_node, critic_tape.leaf(mask));
  const int loss_node =
      critic_tape.affine(critic_tape.sum(masked), -1.0 / static_cast<double>(n_valid), 0.0);
  const std::vector<Matrix> critic_adj = critic_tape.backward(loss_node);
  const Matrix& dx = critic_adj[static_cast<std::size_t>(x_node)];

  // Chain through each sample's QP.
  Matrix u_nom_seed(bsz, 3);
  std::vector<Matrix> kappa_grads;
  for (const Matrix* p : kappa_.params()) kappa_grads.emplace_back(p->rows(), p->cols());
  bool kappa_touched = false;

  for (std::size_t i = 0; i < bsz; ++i) {
    if (!valid[i]) continue;
    Matrix dz(3, 1);
    for (std::size_t j = 0; j < 3; ++j) dz(j, 0) = dx(i, od + j);
    if (dz.inf_norm() == 0.0) continue;
    const QPBackwardResult back = backward(rects[i].spec, rects[i].solution, dz);
    if (!back.ok) {
      ++degenerate_skips_;
      ++diag.skipped;
      continue;
    }
    for (std::size_t j = 0; j < 3; ++j) u_nom_seed(i, j) = -2.0 * back.grads.q(j, 0);
    const ConstraintSet& cs = sets[i];
    for (std::size_t c = 0; c < cs.constraints.size(); ++c) {
      const CBFConstraint& row = cs.constraints[c];
      if (!row.kappa_trace) continue;
      const double seed = back.grads.h(cs.cbf_rows[c], 0);
      if (seed == 0.0) continue;
      Matrix seed_m(1, 1);
      seed_m[0] = seed;
      const std::vector<Matrix> kadj = row.kappa_trace->tape.vjp(row.kappa_trace->out, seed_m);
      for (std::size_t l = 0; l < kappa_grads.size(); ++l)
        kappa_grads[l] += kadj[static_cast<std::size_t>(row.kappa_trace->param_nodes[l])];
      kappa_touched = true;
    }
  }

  const std::vector<Matrix> actor_adj = actor_tape.vjp(u_node, u_nom_seed);
  std::vector<Matrix> actor_grads = grads_from_adjoints(actor_adj, actor_param_nodes);
  for (const Matrix& g : actor_grads) diag.actor_grad_inf = std::max(diag.actor_grad_inf, g.inf_norm());
  for (const Matrix& g : kappa_grads) diag.kappa_grad_inf = std::max(diag.kappa_grad_inf, g.inf_norm());

  actor_adam_.step(actor_.params(), actor_grads, cfg_.actor_lr);
  kappa_adam_.step(kappa_.params(), kappa_grads, cfg_.actor_lr);
  (void)kappa_touched;
  return diag;
}

void Trainer::update_targets(double tau) {
  soft_update(actor_target_.params(), static_cast<const ActorNet&>(actor_).params(), tau);
  soft_update(critic_target_.params(), static_cast<const Mlp&>(critic_).params(), tau);
}

void Trainer::check_kappa_validity() const {
  if (kappa_.eval(0.0) != 0.0)
    throw NumericalError("kappa validity: kappa(0) drifted from zero");
  Rng probe(static_cast<std::uint64_t>(episode_) * 2654435761u + 17u);
  for (int i = 0; i < 8; ++i) {
    const double z1 = probe.uniform(-3.0, 3.0);
    const double dz = probe.uniform(1e-3, 1.0);
    const double lhs = kappa_.eval(z1 + dz) - kappa_.eval(z1);
    if (lhs < kappa_.lambda0() * dz - 1e-9)
      throw NumericalError("kappa validity: monotonicity margin violated after update");
  }
}

EpisodeStats Trainer::run_episode() {
  const EpisodeSetup setup = sample_episode(cfg_, rng_);
  std::vector<double> state = setup.start_state;

  EpisodeStats stats;
  stats.h_min = min_barrier(cfg_, state);
  double discount = 1.0;

  for (int t = 0; t < cfg_.steps_per_episode; ++t) {
    const std::vector<double> obs = observe(cfg_, state, setup.goal_x, setup.goal_y);
    ActResult a = act(state, obs, noise_scale_at(global_step_));
    const std::vector<double> next = step_state(cfg_, state, a.a_rectified);
    const double r = reward_of(cfg_, next, setup.goal_x, setup.goal_y);
    const bool done = goal_distance(next, setup.goal_x, setup.goal_y) < cfg_.goal_radius;

    Transition tr;
    tr.obs = obs;
    tr.obs_next = observe(cfg_, next, setup.goal_x, setup.goal_y);
    for (std::size_t j = 0; j < 3; ++j) {
      tr.a_nominal[j] = a.a_nominal(j, 0);
      tr.a_rectified[j] = a.a_rectified(j, 0);
    }
    tr.reward = r;
    tr.done = done;
    tr.infeasible = a.infeasible;
    buffer_.push(std::move(tr));

    stats.return_value += discount * r;
    discount *= cfg_.gamma;
    const double h = min_barrier(cfg_, next);
    stats.h_min = std::min(stats.h_min, h);
    if (h < 0.0) ++stats.violations;
    if (a.infeasible) {
      ++stats.infeasible_steps;
      ++infeasible_events_;
    }
    if (a.degenerate) ++degenerate_skips_;
    ++stats.steps;
    ++global_step_;

    if (buffer_.size() >= static_cast<std::size_t>(cfg_.batch_size)) {
      const std::vector<std::size_t> batch =
          buffer_.sample_indices(static_cast<std::size_t>(cfg_.batch_size), rng_);
      critic_update(batch);
      actor_kappa_update(batch);
      update_targets(cfg_.target_tau);
    }

    state = next;
    if (done) {
      stats.reached = true;
      break;
    }
  }

  check_kappa_validity();
  ++episode_;
  return stats;
}

TrainLog Trainer::train() {
  if (cfg_.target_tau > 0.5)
    std::fprintf(stderr, "[train] note: target update rate tau=%.3g is aggressive\n",
                 cfg_.target_tau);
  TrainLog log;
  log.episodes.reserve(static_cast<std::size_t>(cfg_.episodes));
  for (int m = 0; m < cfg_.episodes; ++m) {
    const auto start = std::chrono::steady_clock::now();
    log.episodes.push_back(run_episode());
    const auto end = std::chrono::steady_clock::now();
    log.wall_ms.push_back(std::chrono::duration<double, std::milli>(end - start).count());
  }
  log.degenerate_skips = degenerate_skips_;
  log.infeasible_events = infeasible_events_;
  return log;
}

}  // namespace cbflearn
