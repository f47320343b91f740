#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbflearn/barrier.hpp"
#include "cbflearn/cbf.hpp"
#include "cbflearn/kappa.hpp"
#include "cbflearn/rng.hpp"

using namespace cbflearn;

TEST_CASE("barrier values") {
  const Obstacle obs{0.0, 0.0, 1.0};
  SUBCASE("zero on the boundary") { CHECK(barrier(State1{1.0, 0.0, 0.3}, obs) == 0.0); }
  SUBCASE("-1 at the center of a unit circle") { CHECK(barrier(State1{0, 0, 0}, obs) == -1.0); }
  SUBCASE("3 at distance two") { CHECK(barrier(State1{2.0, 0.0, 0.0}, obs) == 3.0); }
}

TEST_CASE("kappa network construction") {
  Rng rng(1);
  SUBCASE("kappa(0) = 0 for any parameters") {
    for (int i = 0; i < 50; ++i) {
      const KappaNet net = KappaNet::make(7, 0.01, rng);
      CHECK(net.eval(0.0) == 0.0);
    }
  }
  SUBCASE("zero weights leave only the bypass") {
    KappaNet net = KappaNet::make(7, 0.01, rng);
    for (Matrix* p : net.params()) p->fill(0.0);
    CHECK(net.eval(2.0) == doctest::Approx(0.02).epsilon(1e-12));
    CHECK(net.eval(-1.0) == doctest::Approx(-0.01).epsilon(1e-12));
  }
  SUBCASE("strictly increasing with the bypass margin over random pairs") {
    const KappaNet net = KappaNet::make(7, 0.01, rng);
    for (int p = 0; p < 10000; ++p) {
      double z1 = rng.uniform(-4, 4);
      double z2 = rng.uniform(-4, 4);
      if (z1 > z2) std::swap(z1, z2);
      if (z2 - z1 < 1e-9) continue;
      const double diff = net.eval(z2) - net.eval(z1);
      CHECK(diff >= net.lambda0() * (z2 - z1) - 1e-12);
    }
  }
}

TEST_CASE("kappa parameter gradients match finite differences") {
  Rng rng(2);
  const double eps = 1e-6;
  for (int draw = 0; draw < 25; ++draw) {
    KappaNet net = KappaNet::make(7, 0.01, rng);
    const double z = rng.uniform(-2, 2);
    const KappaTrace trace = net.eval_traced(z);
    CHECK(trace.value == doctest::Approx(net.eval(z)).epsilon(1e-12));
    const auto adj = trace.tape.backward(trace.out);
    auto params = net.params();
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      Matrix& p = *params[pi];
      const Matrix& g = adj[static_cast<std::size_t>(trace.param_nodes[pi])];
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::abs(p[i]) < 1e-4) continue;  // abs kink
        const double keep = p[i];
        p[i] = keep + eps;
        const double fp = net.eval(z);
        p[i] = keep - eps;
        const double fm = net.eval(z);
        p[i] = keep;
        const double fd = (fp - fm) / (2 * eps);
        CHECK(std::abs(g[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
      }
    }
  }
}

TEST_CASE("first-order constraint assembly") {
  const Obstacle obs{0.0, 0.0, 1.0};
  const LinearKappa kappa(1.0);

  SUBCASE("tangential motion is vacuously allowed outside the circle") {
    const State1 s{2.0, 0.0, 0.0};  // h = 3
    const CBFConstraint c = first_order_constraint(s, obs, kappa, affine_terms(s));
    // u moving tangentially: a_u . u = 0 and b_rhs = -kappa(h) < 0
    const Matrix u_tan = Matrix::column({0.0, 1.0, 0.0});
    CHECK(dot(c.a_u.transposed(), u_tan) == doctest::Approx(0.0));
    CHECK(c.b_rhs < 0.0);
  }
  SUBCASE("due west of the obstacle the x-velocity coefficient is negative") {
    const State1 s{-2.0, 0.0, 0.0};
    const CBFConstraint c = first_order_constraint(s, obs, kappa, affine_terms(s));
    CHECK(c.a_u(0, 0) < 0.0);  // moving east (toward the obstacle) decreases h
  }
  SUBCASE("linear kappa substitution matches -h - grad_h . f") {
    const State1 s{1.5, -0.7, 0.4};
    const AffineTerms t = affine_terms(s);
    const CBFConstraint c = first_order_constraint(s, obs, kappa, t);
    const double h = barrier(s, obs);
    // first order: f = 0
    CHECK(c.b_rhs == doctest::Approx(-h).epsilon(1e-14));
    CHECK(c.psi == h);
  }
}

TEST_CASE("second-order constraint assembly") {
  const Obstacle obs{0.0, 0.0, 0.6};
  const LinearKappa kappa(1.0);
  const double a1 = 1.0;

  SUBCASE("stationary state reduces to psi1 = a1 h") {
    const State2 s{-1.5, -1.2, 0.3, 0.0, 0.0, 0.0};
    const CBFConstraint c = second_order_constraint(s, obs, kappa, a1, affine_terms(s));
    CHECK(c.psi == doctest::Approx(a1 * barrier(s, obs)).epsilon(1e-14));
  }
  SUBCASE("head-on approach gives hdot = -2 v dist") {
    const double dist = 2.0, v = 0.8;
    const State2 s{-dist, 0.0, 0.0, v, 0.0, 0.0};  // moving toward the center
    const CBFConstraint c = second_order_constraint(s, obs, kappa, a1, affine_terms(s));
    const double hdot = c.psi - a1 * barrier(s, obs);
    CHECK(hdot == doctest::Approx(-2.0 * v * dist).epsilon(1e-12));
  }
  SUBCASE("torque channel has no instantaneous effect on h") {
    const State2 s{-1.0, 0.4, 0.7, 0.2, -0.1, 0.3};
    const CBFConstraint c = second_order_constraint(s, obs, kappa, a1, affine_terms(s));
    CHECK(c.a_u(0, 2) == 0.0);
  }
  SUBCASE("coefficients match numerical differentiation of psi1 along the flow") {
    Rng rng(4);
    for (int trial = 0; trial < 50; ++trial) {
      State2 s{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-3, 3),
               rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)};
      if (barrier(s, obs) < 0.1) continue;
      const Matrix u = Matrix::column(
          {rng.uniform(-1, 1), rng.uniform(-1, 1), rng.uniform(-1, 1)});
      const AffineTerms t = affine_terms(s);
      const CBFConstraint c = second_order_constraint(s, obs, kappa, a1, t);
      // analytic psi1dot from the emitted row: a_u u - (b_rhs + kappa(psi1))
      const double analytic = dot(c.a_u.transposed(), u) - (c.b_rhs + kappa.eval(c.psi));

      auto psi1_at = [&](const State2& st) {
        const double h = barrier(st, obs);
        const double hdot = 2.0 * ((st.x - obs.cx) * st.vx + (st.y - obs.cy) * st.vy);
        return hdot + a1 * h;
      };
      const double dtfd = 1e-6;
      const State2 fwd = step(s, u, dtfd);
      State2 bwd = s;
      {
        // central difference via a backward Euler probe
        const AffineTerms tb = affine_terms(s);
        const Matrix xdot = tb.f + matmul(tb.g, u);
        bwd.x -= dtfd * xdot(0, 0);
        bwd.y -= dtfd * xdot(1, 0);
        bwd.theta -= dtfd * xdot(2, 0);
        bwd.vx -= dtfd * xdot(3, 0);
        bwd.vy -= dtfd * xdot(4, 0);
        bwd.omega -= dtfd * xdot(5, 0);
      }
      const double fd = (psi1_at(fwd) - psi1_at(bwd)) / (2.0 * dtfd);
      CHECK(std::abs(analytic - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("combine_constraints stacking") {
  SUBCASE("single constraint u >= 1 flips sign") {
    CBFConstraint c;
    c.a_u = Matrix::row({1.0, 0.0, 0.0});
    c.b_rhs = 1.0;
    ControlSet set;
    set.box.lo = Matrix::column({-5, -5, -5});
    set.box.hi = Matrix::column({5, 5, 5});
    const ConstraintSet cs = combine_constraints({c}, set);
    CHECK(cs.G(0, 0) == -1.0);
    CHECK(cs.h(0, 0) == -1.0);
    CHECK(cs.G.rows() == 7);  // 1 CBF row + 6 box rows
    CHECK(cs.cbf_rows.size() == 1);
  }
  SUBCASE("two obstacles produce two CBF rows before the box rows") {
    CBFConstraint c1, c2;
    c1.a_u = Matrix::row({1.0, 0.0, 0.0});
    c1.b_rhs = 0.5;
    c2.a_u = Matrix::row({0.0, 1.0, 0.0});
    c2.b_rhs = -0.5;
    ControlSet set;
    set.box.lo = Matrix::column({-1, -1, -1});
    set.box.hi = Matrix::column({1, 1, 1});
    const ConstraintSet cs = combine_constraints({c1, c2}, set);
    CHECK(cs.G.rows() == 8);
    CHECK(cs.cbf_rows == std::vector<int>({0, 1}));
  }
  SUBCASE("octagon inscribes the norm ball") {
    ControlSet set;
    set.box.lo = Matrix::column({-1, -1, -0.5});
    set.box.hi = Matrix::column({1, 1, 0.5});
    set.norm_bound = 1.0;
    const ConstraintSet cs = combine_constraints({}, set);
    CHECK(cs.G.rows() == 10);  // 8 facets + 2 torque rows
    // every vertex of the octagon lies on the unit circle
    const double d = std::cos(M_PI / 8.0);
    for (int k = 0; k < 8; ++k) {
      const double mid = 2.0 * M_PI * (k + 0.5) / 8.0;
      const double vx = std::cos(mid) * d / std::cos(M_PI / 8.0);
      const double vy = std::sin(mid) * d / std::cos(M_PI / 8.0);
      CHECK(std::hypot(vx, vy) == doctest::Approx(1.0).epsilon(1e-12));
      for (std::size_t r = 0; r < 8; ++r)
        CHECK(cs.G(r, 0) * vx + cs.G(r, 1) * vy <= cs.h(r, 0) + 1e-12);
    }
    // facet centers sit at the documented maximum radial error
    CHECK(1.0 - d == doctest::Approx(1.0 * (1.0 - std::cos(M_PI / 8.0))));
  }
}

TEST_CASE("clamp_to_control_set") {
  ControlSet set;
  set.box.lo = Matrix::column({-1, -1, -0.5});
  set.box.hi = Matrix::column({1, 1, 0.5});
  set.norm_bound = 1.0;
  const Matrix u = Matrix::column({2.0, 2.0, 3.0});
  const Matrix c = clamp_to_control_set(u, set);
  CHECK(std::hypot(c(0, 0), c(1, 0)) <= 1.0 + 1e-12);
  CHECK(c(2, 0) == 0.5);
}
