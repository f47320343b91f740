#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbflearn/dynamics.hpp"
#include "cbflearn/rng.hpp"

using namespace cbflearn;

TEST_CASE("first-order affine terms") {
  SUBCASE("theta = 0 gives an identity rotation block") {
    const AffineTerms t = affine_terms(State1{0.2, -0.4, 0.0});
    CHECK(t.f.inf_norm() == 0.0);
    CHECK((t.g == Matrix::identity(3)));
  }
  SUBCASE("theta = pi/2 maps forward motion to +y") {
    const AffineTerms t = affine_terms(State1{0, 0, M_PI / 2});
    const Matrix u = Matrix::column({1, 0, 0});
    const Matrix xdot = matmul(t.g, u);
    CHECK(xdot(0, 0) == doctest::Approx(0.0).epsilon(1e-12));
    CHECK(xdot(1, 0) == doctest::Approx(1.0));
  }
}

TEST_CASE("second-order affine terms") {
  State2 s{1.0, 2.0, 0.7, 0.3, -0.2, 0.1};
  const AffineTerms t = affine_terms(s);
  SUBCASE("f passes world-frame velocities through") {
    CHECK(t.f(0, 0) == s.vx);
    CHECK(t.f(1, 0) == s.vy);
    CHECK(t.f(2, 0) == s.omega);
    CHECK(t.f(3, 0) == 0.0);
    CHECK(t.f(4, 0) == 0.0);
    CHECK(t.f(5, 0) == 0.0);
  }
  SUBCASE("accelerations vanish under zero input") {
    const Matrix xdot = t.f + matmul(t.g, Matrix(3, 1));
    CHECK(xdot(3, 0) == 0.0);
    CHECK(xdot(4, 0) == 0.0);
    CHECK(xdot(5, 0) == 0.0);
  }
}

TEST_CASE("euler step") {
  SUBCASE("zero input leaves a first-order state unchanged") {
    const State1 s{0.3, 0.5, 1.2};
    const State1 out = step(s, Matrix(3, 1), 0.1);
    CHECK(out.x == s.x);
    CHECK(out.y == s.y);
    CHECK(out.theta == s.theta);
  }
  SUBCASE("unit forward input advances x by v dt at theta = 0") {
    const State1 out = step(State1{0, 0, 0}, Matrix::column({1, 0, 0}), 0.1);
    CHECK(out.x == doctest::Approx(0.1));
    CHECK(out.y == doctest::Approx(0.0));
  }
  SUBCASE("coasting second-order state advances by its velocity") {
    State2 s;
    s.vx = 1.0;
    const State2 out = step(s, Matrix(3, 1), 0.1);
    CHECK(out.x == doctest::Approx(0.1));
    CHECK(out.vx == doctest::Approx(1.0));
    CHECK(out.vy == doctest::Approx(0.0));
  }
  SUBCASE("dt must be positive") {
    CHECK_THROWS_AS(step(State1{}, Matrix(3, 1), 0.0), std::invalid_argument);
  }
  SUBCASE("non-finite result raises a numerical error") {
    State2 s;
    s.vx = std::numeric_limits<double>::max();
    CHECK_THROWS_AS(step(s, Matrix::column({1e308, 0, 0}), 1e6), NumericalError);
  }
}

TEST_CASE("rotation block is orthonormal for all headings") {
  Rng rng(3);
  for (int i = 0; i < 500; ++i) {
    const double theta = rng.uniform(-M_PI, M_PI);
    const AffineTerms t = affine_terms(State1{0, 0, theta});
    const Matrix u = Matrix::column({rng.uniform(-2, 2), rng.uniform(-2, 2), 0.0});
    const Matrix xdot = matmul(t.g, u);
    const double body = std::hypot(u(0, 0), u(1, 0));
    const double world = std::hypot(xdot(0, 0), xdot(1, 0));
    CHECK(std::abs(body - world) <= 1e-12);
  }
}

TEST_CASE("step is deterministic bit for bit") {
  const State2 s{0.1, -0.2, 0.9, 0.4, 0.3, -0.7};
  const Matrix u = Matrix::column({0.3, -0.1, 0.2});
  const State2 a = step(s, u, 0.02);
  const State2 b = step(s, u, 0.02);
  CHECK(a.x == b.x);
  CHECK(a.y == b.y);
  CHECK(a.theta == b.theta);
  CHECK(a.vx == b.vx);
  CHECK(a.vy == b.vy);
  CHECK(a.omega == b.omega);
}

TEST_CASE("halving dt converges at first order") {
  // Rotating input makes the trajectory genuinely curved.
  auto endpoint = [](double dt, int steps) {
    State1 s{0, 0, 0};
    for (int i = 0; i < steps; ++i) s = step(s, Matrix::column({1.0, 0.0, 1.5}), dt);
    return s;
  };
  auto error = [&](double dt, int steps) {
    const State1 coarse = endpoint(dt, steps);
    const State1 fine = endpoint(dt / 32, steps * 32);  // reference
    return std::hypot(coarse.x - fine.x, coarse.y - fine.y);
  };
  const double e1 = error(0.04, 50);
  const double e2 = error(0.02, 100);
  const double e3 = error(0.01, 200);
  CHECK(e1 / e2 > 2.0 / 2.0);  // at least O(dt): ratio should be near 2
  CHECK(e1 / e2 < 2.0 * 2.0);
  CHECK(e2 / e3 > 2.0 / 2.0);
  CHECK(e2 / e3 < 2.0 * 2.0);
}

TEST_CASE("angle wrapping stays in (-pi, pi]") {
  CHECK(wrap_angle(3.0 * M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(-M_PI) == doctest::Approx(M_PI));
  CHECK(wrap_angle(0.1) == doctest::Approx(0.1));
  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    const double w = wrap_angle(rng.uniform(-50, 50));
    CHECK(w > -M_PI);
    CHECK(w <= M_PI);
  }
}
