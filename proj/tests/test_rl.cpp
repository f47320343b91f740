#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbflearn/ddpg.hpp"
#include "cbflearn/rollout.hpp"

using namespace cbflearn;

namespace {

ScenarioConfig tiny_cfg(const std::string& name = "optimality") {
  ScenarioConfig cfg = make_scenario(name);
  cfg.episodes = 2;
  cfg.steps_per_episode = 30;
  cfg.batch_size = 8;
  cfg.buffer_capacity = 1000;
  return cfg;
}

std::vector<Matrix> snapshot(const std::vector<Matrix*>& params) {
  std::vector<Matrix> out;
  for (const Matrix* p : params) out.push_back(*p);
  return out;
}

bool identical(const std::vector<Matrix>& a, const std::vector<Matrix*>& b) {
  for (std::size_t i = 0; i < a.size(); ++i)
    if (!(a[i] == *b[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("replay buffer") {
  SUBCASE("FIFO eviction at capacity") {
    ReplayBuffer buf(5);
    for (int i = 0; i < 8; ++i) {
      Transition t;
      t.reward = i;
      buf.push(std::move(t));
    }
    CHECK(buf.size() == 5);
    // first 3 records evicted
    CHECK(buf.at(0).reward == 3.0);
    CHECK(buf.at(4).reward == 7.0);
  }
  SUBCASE("sampling without replacement") {
    ReplayBuffer buf(100);
    for (int i = 0; i < 50; ++i) {
      Transition t;
      t.reward = i;
      buf.push(std::move(t));
    }
    Rng rng(9);
    for (int trial = 0; trial < 200; ++trial) {
      const auto idx = buf.sample_indices(16, rng);
      CHECK(idx.size() == 16);
      std::vector<char> seen(50, 0);
      for (std::size_t i : idx) {
        REQUIRE(i < 50);
        CHECK(!seen[i]);
        seen[i] = 1;
      }
    }
    CHECK_THROWS_AS(buf.sample_indices(51, rng), std::invalid_argument);
  }
}

TEST_CASE("soft update rule") {
  Rng rng(1);
  Mlp net = Mlp::make({2, 3, 1}, rng);
  Mlp target = Mlp::make({2, 3, 1}, rng);

  SUBCASE("tau = 1 copies the online net") {
    soft_update(target.params(), static_cast<const Mlp&>(net).params(), 1.0);
    CHECK(identical(snapshot(net.params()), target.params()));
  }
  SUBCASE("tau = 0 freezes the target") {
    const auto before = snapshot(target.params());
    soft_update(target.params(), static_cast<const Mlp&>(net).params(), 0.0);
    CHECK(identical(before, target.params()));
  }
  SUBCASE("scalar case: 0.7 * 1 + 0.3 * 0") {
    Mlp one = net, zero = net;
    for (Matrix* p : one.params()) p->fill(1.0);
    for (Matrix* p : zero.params()) p->fill(0.0);
    soft_update(zero.params(), static_cast<const Mlp&>(one).params(), 0.7);
    CHECK((*zero.params()[0])(0, 0) == doctest::Approx(0.7).epsilon(1e-15));
  }
  SUBCASE("contraction toward the online net") {
    const auto before = snapshot(target.params());
    soft_update(target.params(), static_cast<const Mlp&>(net).params(), 0.25);
    const auto nets = snapshot(net.params());
    const auto after = snapshot(target.params());
    for (std::size_t i = 0; i < nets.size(); ++i)
      for (std::size_t j = 0; j < nets[i].size(); ++j)
        CHECK(std::abs(after[i][j] - nets[i][j]) ==
              doctest::Approx(0.75 * std::abs(before[i][j] - nets[i][j])).epsilon(1e-12));
  }
}

TEST_CASE("act") {
  const ScenarioConfig cfg = tiny_cfg();
  Trainer trainer(cfg, 3);

  SUBCASE("zero noise far from obstacles: filter is the identity") {
    const std::vector<double> state{-1.4, -1.4, M_PI / 4};
    const std::vector<double> obs = observe(cfg, state, 1.6, 1.6);
    const ActResult a = trainer.act(state, obs, 0.0);
    const Matrix mu = trainer.actor().act(Matrix::row_from(obs));
    for (std::size_t j = 0; j < 3; ++j) {
      CHECK(a.a_nominal(j, 0) == doctest::Approx(mu(0, j)).epsilon(1e-15));
      CHECK(a.a_rectified(j, 0) == doctest::Approx(mu(0, j)).epsilon(1e-12));
    }
    CHECK(!a.infeasible);
  }
  SUBCASE("nominal pointing into the obstacle is corrected along the constraint normal") {
    // state just west of the obstacle boundary, facing east
    const std::vector<double> state{-0.7, 0.0, 0.0};
    const std::vector<double> obs = observe(cfg, state, 1.6, 0.0);
    // drive the actor output toward the obstacle by asking act() directly:
    // rather than retraining, check only geometry through the rectifier.
    const ConstraintSet cs = assemble_constraints(cfg, state, trainer.kappa_net(), false);
    const Matrix u_nom = Matrix::column({1.0, 0.0, 0.0});
    const RectifyResult r = rectify(u_nom, cs.G, cs.h, cfg.control_set());
    REQUIRE(r.status == QPStatus::kOptimal);
    const Matrix delta = r.u_safe - u_nom;
    CHECK(delta.inf_norm() > 0.0);
    // correction is anti-parallel to the motion-toward-obstacle direction:
    // here the normal is along -x, so only u_x should shrink.
    CHECK(delta(0, 0) < 0.0);
    CHECK(std::abs(delta(1, 0)) <= 1e-9);
    CHECK(std::abs(delta(2, 0)) <= 1e-9);
  }
  SUBCASE("noise statistics over 10^4 draws") {
    const std::vector<double> state{-1.4, -1.4, M_PI / 4};
    const std::vector<double> obs = observe(cfg, state, 1.6, 1.6);
    const Matrix mu = trainer.actor().act(Matrix::row_from(obs));
    const double sigma = 0.05;  // small enough that clipping never bites here
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) {
      const ActResult a = trainer.act(state, obs, sigma);
      sum += a.a_nominal(0, 0) - mu(0, 0);
    }
    const double mean = sum / n;
    CHECK(std::abs(mean) <= 3.0 * sigma / 100.0);
  }
}

TEST_CASE("critic update") {
  ScenarioConfig cfg = tiny_cfg();
  SUBCASE("myopic target y = R; perfect fit gives zero loss and zero gradient") {
    ScenarioConfig myopic = cfg;
    myopic.gamma = 1e-300;  // gamma must stay positive; effectively zero
    Trainer trainer(myopic, 5);
    // zero the target critic so the bootstrap term vanishes to exactly zero
    for (Matrix* p : trainer.critic_target().params()) p->fill(0.0);
    // one transition whose reward equals the critic's current prediction
    Transition t;
    const std::vector<double> obs(myopic.obs_dim(), 0.1);
    t.obs = obs;
    t.obs_next = obs;
    t.a_rectified = {0.2, 0.0, -0.1};
    Matrix input(1, myopic.obs_dim() + 3);
    for (std::size_t j = 0; j < myopic.obs_dim(); ++j) input(0, j) = obs[j];
    input(0, myopic.obs_dim()) = 0.2;
    input(0, myopic.obs_dim() + 1) = 0.0;
    input(0, myopic.obs_dim() + 2) = -0.1;
    t.reward = trainer.critic().forward(input)(0, 0);
    t.done = false;  // y = R + gamma * 0 = R exactly
    trainer.buffer().push(t);
    const auto before = snapshot(trainer.critic().params());
    const double loss = trainer.critic_update({0});
    CHECK(loss == 0.0);
    CHECK(identical(before, trainer.critic().params()));  // zero gradient, zero Adam step
  }
  SUBCASE("hand-computed TD error on a scalar net") {
    cfg.hidden1 = 1;
    cfg.hidden2 = 1;
    Trainer trainer(cfg, 6);
    // force a known linear critic: tanh hidden layers with zero weights give
    // Q = b_out; set output bias to 0.3
    for (Matrix* p : trainer.critic().params()) p->fill(0.0);
    trainer.critic().biases[2](0, 0) = 0.3;
    for (Matrix* p : trainer.critic_target().params()) p->fill(0.0);
    trainer.critic_target().biases[2](0, 0) = 0.5;

    Transition t;
    t.obs = std::vector<double>(cfg.obs_dim(), 0.2);
    t.obs_next = t.obs;
    t.reward = 1.0;
    t.done = false;
    trainer.buffer().push(t);
    // y = 1 + 0.9 * 0.5 (config gamma of the trainer is the tiny_cfg value)
    const double gamma = trainer.config().gamma;
    const double expected_y = 1.0 + gamma * 0.5;
    const double expected_loss = (expected_y - 0.3) * (expected_y - 0.3);
    const double loss = trainer.critic_update({0});
    CHECK(loss == doctest::Approx(expected_loss).epsilon(1e-12));
  }
  SUBCASE("critic consumes the rectified action, not the nominal") {
    Trainer trainer(cfg, 7);
    Transition t;
    t.obs = std::vector<double>(cfg.obs_dim(), 0.1);
    t.obs_next = t.obs;
    t.a_nominal = {0.9, 0.9, 0.9};
    t.a_rectified = {0.1, 0.0, 0.0};
    t.reward = 0.0;
    trainer.buffer().push(t);
    const double loss1 = trainer.critic_update({0});
    // mutate the nominal action; the loss of an identical update must not move
    Trainer trainer2(cfg, 7);
    Transition t2 = t;
    t2.a_nominal = {-0.9, 0.2, 0.4};
    trainer2.buffer().push(t2);
    const double loss2 = trainer2.critic_update({0});
    CHECK(loss1 == loss2);
  }
}

TEST_CASE("actor and kappa update") {
  ScenarioConfig cfg = tiny_cfg();
  cfg.batch_size = 4;

  SUBCASE("states far from obstacles leave kappa untouched") {
    Trainer trainer(cfg, 8);
    for (int i = 0; i < 4; ++i) {
      Transition t;
      const std::vector<double> state{-1.4 + 0.01 * i, -1.4, M_PI / 4};
      t.obs = observe(cfg, state, 1.6, 1.6);
      t.obs_next = t.obs;
      trainer.buffer().push(t);
    }
    const auto kappa_before = snapshot(trainer.kappa_net().params());
    const UpdateDiagnostics diag = trainer.actor_kappa_update({0, 1, 2, 3});
    CHECK(diag.kappa_grad_inf == 0.0);
    CHECK(identical(kappa_before, trainer.kappa_net().params()));
    CHECK(diag.actor_grad_inf > 0.0);
  }

  SUBCASE("matches plain DDPG gradient when the filter is inactive") {
    Trainer trainer(cfg, 9);
    Transition t;
    const std::vector<double> state{-1.4, -1.4, M_PI / 4};
    t.obs = observe(cfg, state, 1.6, 1.6);
    t.obs_next = t.obs;
    trainer.buffer().push(t);

    // composite gradient via the QP chain
    Trainer twin(cfg, 9);
    twin.buffer().push(t);
    twin.actor_kappa_update({0});

    // plain DDPG gradient: d/dtheta Q(s, mu(s)) with no filter
    Tape tape;
    const int obs_node = tape.leaf(Matrix::row_from(t.obs));
    std::vector<int> actor_nodes;
    const int u_node = trainer.actor().forward_traced(tape, obs_node, &actor_nodes);
    // critic on the same tape: concat by matmul trick is unavailable, so
    // recompute dQ/da with a separate tape and chain by hand.
    Tape ctape;
    Matrix x(1, cfg.obs_dim() + 3);
    for (std::size_t j = 0; j < cfg.obs_dim(); ++j) x(0, j) = t.obs[j];
    const Matrix u = tape.value(u_node);
    for (std::size_t j = 0; j < 3; ++j) x(0, cfg.obs_dim() + j) = u(0, j);
    const int x_node = ctape.leaf(x);
    const int q_node = trainer.critic().forward_traced(ctape, x_node, nullptr);
    const int loss_node = ctape.affine(q_node, -1.0, 0.0);
    const auto cadj = ctape.backward(loss_node);
    Matrix seed(1, 3);
    for (std::size_t j = 0; j < 3; ++j)
      seed(0, j) = cadj[static_cast<std::size_t>(x_node)](0, cfg.obs_dim() + j);
    const auto aadj = tape.vjp(u_node, seed);

    // apply the same Adam step to the reference trainer
    std::vector<Matrix> grads;
    for (int id : actor_nodes) grads.push_back(aadj[static_cast<std::size_t>(id)]);
    trainer.actor_adam().step(trainer.actor().params(), grads, cfg.actor_lr);

    const auto a = snapshot(trainer.actor().params());
    const auto b = snapshot(twin.actor().params());
    for (std::size_t i = 0; i < a.size(); ++i)
      CHECK((a[i] - b[i]).inf_norm() <= 1e-12);
  }

  SUBCASE("end-to-end kappa gradient matches finite differences on one state") {
    // state close to the obstacle so the CBF row is active under the nominal
    cfg.batch_size = 1;
    Trainer trainer(cfg, 10);
    Transition t;
    const std::vector<double> state{-0.75, 0.05, 0.0};
    t.obs = observe(cfg, state, 1.6, 0.0);
    t.obs_next = t.obs;
    trainer.buffer().push(t);

    // analytic gradient, but do not apply it: use a twin and zero lr trick
    ScenarioConfig frozen = cfg;
    frozen.actor_lr = 0.0;
    Trainer probe(frozen, 10);
    probe.buffer().push(t);
    const UpdateDiagnostics diag = probe.actor_kappa_update({0});
    if (diag.kappa_grad_inf == 0.0) {
      WARN("constraint inactive for this draw; kappa gradient trivially zero");
      return;
    }

    // E[Q] as a function of one kappa parameter, via the full filter chain
    auto objective = [&](Trainer& tr) {
      const Matrix obs_row = Matrix::row_from(t.obs);
      const Matrix u_nom_row = tr.actor().act(obs_row);
      Matrix u_nom(3, 1);
      for (std::size_t j = 0; j < 3; ++j) u_nom(j, 0) = u_nom_row(0, j);
      const ConstraintSet cs = assemble_constraints(cfg, state, tr.kappa_net(), false);
      const RectifyResult r = rectify(u_nom, cs.G, cs.h, cfg.control_set());
      REQUIRE(r.status == QPStatus::kOptimal);
      Matrix x(1, cfg.obs_dim() + 3);
      for (std::size_t j = 0; j < cfg.obs_dim(); ++j) x(0, j) = t.obs[j];
      for (std::size_t j = 0; j < 3; ++j) x(0, cfg.obs_dim() + j) = r.u_safe(j, 0);
      return tr.critic().forward(x)(0, 0);
    };

    // compare -dJ (the update minimizes -Q) against finite differences for a
    // few parameters with appreciable gradient entries
    Trainer fd_trainer(frozen, 10);
    fd_trainer.buffer().push(t);
    const UpdateDiagnostics diag2 = fd_trainer.actor_kappa_update({0});
    (void)diag2;

    const double eps = 1e-5;
    int checked = 0;
    // recover analytic grads by re-running the probe chain manually
    // (kappa params order: w1, b1, w2, b2, w3, b3)
    Trainer analytic(frozen, 10);
    analytic.buffer().push(t);
    // manual chain replication:
    const Matrix obs_row = Matrix::row_from(t.obs);
    Tape atape;
    const int on = atape.leaf(obs_row);
    const int un = analytic.actor().forward_traced(atape, on, nullptr);
    Matrix u_nom(3, 1);
    for (std::size_t j = 0; j < 3; ++j) u_nom(j, 0) = atape.value(un)(0, j);
    const ConstraintSet cs = assemble_constraints(cfg, state, analytic.kappa_net(), true);
    const RectifyResult r = rectify(u_nom, cs.G, cs.h, cfg.control_set());
    REQUIRE(r.status == QPStatus::kOptimal);
    Matrix x(1, cfg.obs_dim() + 3);
    for (std::size_t j = 0; j < cfg.obs_dim(); ++j) x(0, j) = t.obs[j];
    for (std::size_t j = 0; j < 3; ++j) x(0, cfg.obs_dim() + j) = r.u_safe(j, 0);
    Tape ctape;
    const int xn = ctape.leaf(x);
    const int qn = analytic.critic().forward_traced(ctape, xn, nullptr);
    const auto cadj = ctape.backward(qn);  // dQ/dx
    Matrix dz(3, 1);
    for (std::size_t j = 0; j < 3; ++j) dz(j, 0) = cadj[static_cast<std::size_t>(xn)](0, cfg.obs_dim() + j);
    const QPBackwardResult back = backward(r.spec, r.solution, dz);
    REQUIRE(back.ok);
    std::vector<Matrix> kgrads;
    for (Matrix* p : analytic.kappa_net().params()) kgrads.emplace_back(p->rows(), p->cols());
    for (std::size_t c = 0; c < cs.constraints.size(); ++c) {
      const auto& row = cs.constraints[c];
      if (!row.kappa_trace) continue;
      const double seed = back.grads.h(cs.cbf_rows[c], 0);
      if (seed == 0.0) continue;
      Matrix sm(1, 1);
      sm[0] = seed;
      const auto kadj = row.kappa_trace->tape.vjp(row.kappa_trace->out, sm);
      for (std::size_t l = 0; l < kgrads.size(); ++l)
        kgrads[l] += kadj[static_cast<std::size_t>(row.kappa_trace->param_nodes[l])];
    }

    auto params = analytic.kappa_net().params();
    for (std::size_t pi = 0; pi < params.size() && checked < 8; ++pi) {
      Matrix& p = *params[pi];
      for (std::size_t i = 0; i < p.size() && checked < 8; ++i) {
        if (std::abs(kgrads[pi][i]) < 1e-6) continue;
        if (std::abs(p[i]) < 1e-3) continue;
        const double keep = p[i];
        p[i] = keep + eps;
        const double fp = objective(analytic);
        p[i] = keep - eps;
        const double fm = objective(analytic);
        p[i] = keep;
        const double fd = (fp - fm) / (2 * eps);
        CHECK(std::abs(kgrads[pi][i] - fd) <= 1e-3 * std::max(1.0, std::abs(fd)));
        ++checked;
      }
    }
    CHECK(checked > 0);
  }
}

TEST_CASE("training loop") {
  SUBCASE("M = 1, T = 1 yields one transition") {
    ScenarioConfig cfg = tiny_cfg();
    cfg.episodes = 1;
    cfg.steps_per_episode = 1;
    Trainer trainer(cfg, 11);
    const TrainLog log = trainer.train();
    CHECK(log.episodes.size() == 1);
    CHECK(trainer.buffer().size() == 1);
    CHECK(trainer.global_step() == 1);
  }
  SUBCASE("zero learning rates leave parameters bit-identical") {
    ScenarioConfig cfg = tiny_cfg();
    cfg.actor_lr = 0.0;
    cfg.critic_lr = 0.0;
    cfg.episodes = 1;
    Trainer trainer(cfg, 12);
    const auto actor_before = snapshot(trainer.actor().params());
    const auto critic_before = snapshot(trainer.critic().params());
    const auto kappa_before = snapshot(trainer.kappa_net().params());
    trainer.run_episode();
    CHECK(identical(actor_before, trainer.actor().params()));
    CHECK(identical(critic_before, trainer.critic().params()));
    CHECK(identical(kappa_before, trainer.kappa_net().params()));
  }
  SUBCASE("fixed seed reproduces the return series bit for bit") {
    const ScenarioConfig cfg = tiny_cfg();
    Trainer a(cfg, 13), b(cfg, 13);
    const TrainLog la = a.train();
    const TrainLog lb = b.train();
    REQUIRE(la.episodes.size() == lb.episodes.size());
    for (std::size_t i = 0; i < la.episodes.size(); ++i)
      CHECK(la.episodes[i].return_value == lb.episodes[i].return_value);
  }
}
