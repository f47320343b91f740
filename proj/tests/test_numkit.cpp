#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "cbflearn/linalg.hpp"
#include "cbflearn/matrix.hpp"
#include "cbflearn/rng.hpp"
#include "cbflearn/tape.hpp"

using namespace cbflearn;

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

}  // namespace

TEST_CASE("matmul basics") {
  const Matrix m = Matrix::from_rows({{1, 2}, {3, 4}});

  SUBCASE("identity is neutral") {
    CHECK(matmul(Matrix::identity(2), m) == m);
    CHECK(matmul(m, Matrix::identity(2)) == m);
  }
  SUBCASE("hand product") {
    const Matrix v = Matrix::column({1, 1});
    const Matrix p = matmul(m, v);
    CHECK(p.rows() == 2);
    CHECK(p.cols() == 1);
    CHECK(p(0, 0) == doctest::Approx(3.0));
    CHECK(p(1, 0) == doctest::Approx(7.0));
  }
  SUBCASE("zero matrix annihilates") {
    const Matrix z(2, 2);
    CHECK(matmul(z, m).inf_norm() == 0.0);
  }
  SUBCASE("dimension mismatch throws") {
    CHECK_THROWS_AS(matmul(m, Matrix(3, 1)), std::invalid_argument);
  }
}

TEST_CASE("solve_linear basics") {
  SUBCASE("identity system") {
    const Matrix b = Matrix::column({2.5, -1.0, 7.0});
    CHECK(solve_linear(Matrix::identity(3), b) == b);
  }
  SUBCASE("diagonal inverse by hand") {
    const Matrix a = Matrix::from_rows({{2, 0}, {0, 4}});
    const Matrix b = Matrix::column({2, 8});
    const Matrix x = solve_linear(a, b);
    CHECK(x(0, 0) == doctest::Approx(1.0));
    CHECK(x(1, 0) == doctest::Approx(2.0));
  }
  SUBCASE("rank-deficient system throws") {
    const Matrix a = Matrix::from_rows({{1, 1}, {1, 1}});
    CHECK_THROWS_AS(solve_linear(a, Matrix::column({1, 2})), SingularSystemError);
  }
  SUBCASE("pivoting handles a zero leading entry") {
    const Matrix a = Matrix::from_rows({{0, 1}, {1, 0}});
    const Matrix x = solve_linear(a, Matrix::column({3, 4}));
    CHECK(x(0, 0) == doctest::Approx(4.0));
    CHECK(x(1, 0) == doctest::Approx(3.0));
  }
}

TEST_CASE("solve_linear reconstructs rhs on random well-conditioned systems") {
  Rng rng(7);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + rng.index(10);
    Matrix a = random_matrix(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 4.0;
    const Matrix rhs = random_matrix(rng, n, 2);
    const Matrix x = solve_linear(a, rhs);
    const double resid = (matmul(a, x) - rhs).inf_norm();
    CHECK(resid <= 1e-9 * (1.0 + rhs.inf_norm()));
  }
}

TEST_CASE("tape worked examples") {
  SUBCASE("d(x*x)/dx = 2x at x = 3") {
    Tape t;
    Matrix x(1, 1);
    x[0] = 3.0;
    const int xn = t.leaf(x);
    const int root = t.mul(xn, xn);
    const auto adj = t.backward(root);
    CHECK(adj[0](0, 0) == doctest::Approx(6.0));
  }
  SUBCASE("constant root has zero gradients") {
    Tape t;
    const int xn = t.leaf(Matrix::row({1.0, 2.0}));
    const int c = t.leaf(Matrix::row({5.0, -1.0}));
    const int root = t.sum(c);
    const auto adj = t.backward(root);
    CHECK(adj[static_cast<std::size_t>(xn)].inf_norm() == 0.0);
  }
  SUBCASE("grad of sum(|w| z) is sign(w) z") {
    Tape t;
    const Matrix w = Matrix::row({-2.0, 3.0, -0.5});
    const Matrix z = Matrix::row({1.5, -4.0, 2.0});
    const int wn = t.leaf(w);
    const int root = t.sum(t.mul(t.abs(wn), t.leaf(z)));
    const auto adj = t.backward(root);
    const Matrix& g = adj[static_cast<std::size_t>(wn)];
    CHECK(g(0, 0) == doctest::Approx(-1.5));
    CHECK(g(0, 1) == doctest::Approx(-4.0));
    CHECK(g(0, 2) == doctest::Approx(-2.0));
  }
  SUBCASE("abs derivative at the kink is zero") {
    Tape t;
    const int wn = t.leaf(Matrix::row({0.0}));
    const int root = t.sum(t.abs(wn));
    const auto adj = t.backward(root);
    CHECK(adj[static_cast<std::size_t>(wn)](0, 0) == 0.0);
  }
  SUBCASE("non-scalar root is a contract error") {
    Tape t;
    const int xn = t.leaf(Matrix::row({1.0, 2.0}));
    CHECK_THROWS_AS(t.backward(xn), std::invalid_argument);
  }
}

// Every primitive's reverse-mode gradient against central finite differences,
// keeping inputs away from the |.| kink.
TEST_CASE("tape gradients match finite differences on random graphs") {
  Rng rng(11);
  const double eps = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t r = 1 + rng.index(3);
    const std::size_t c = 1 + rng.index(3);
    Matrix a = random_matrix(rng, r, c);
    const Matrix b = random_matrix(rng, r, c);
    const Matrix bt = b.transposed();
    const Matrix row = random_matrix(rng, 1, c);
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i]) < 2e-4) a[i] += a[i] >= 0 ? 4e-4 : -4e-4;

    const int variant = trial % 8;
    auto build = [&](Tape& t, const Matrix& av) {
      const int an = t.leaf(av);
      switch (variant) {
        case 0: return t.sum_squares(t.add(an, t.leaf(b)));
        case 1: return t.sum_squares(t.sub(an, t.leaf(b)));
        case 2: return t.sum(t.mul(t.abs(an), t.leaf(b)));
        case 3: return t.sum_squares(t.softplus(an));
        case 4: return t.sum(t.tanh(an));
        case 5: return t.sum_squares(t.matmul(an, t.leaf(bt)));
        case 6: return t.sum(t.add_row(an, t.leaf(row)));
        default: return t.sum_squares(t.mul_row(an, t.leaf(row)));
      }
    };

    Tape tape;
    const int root = build(tape, a);
    const auto adj = tape.backward(root);
    const Matrix& grad = adj[0];

    for (std::size_t i = 0; i < a.size(); ++i) {
      Matrix ap = a, am = a;
      ap[i] += eps;
      am[i] -= eps;
      Tape tp, tm;
      const double fp = tp.value(build(tp, ap))(0, 0);
      const double fm = tm.value(build(tm, am))(0, 0);
      const double fd = (fp - fm) / (2.0 * eps);
      CHECK(std::abs(grad[i] - fd) <= 1e-5 * std::max(1.0, std::abs(fd)));
    }
  }
}

TEST_CASE("rng determinism and serialization") {
  Rng a(42), b(42);
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == b.normal());

  std::stringstream ss;
  ss << a;
  Rng c(0);
  ss >> c;
  for (int i = 0; i < 100; ++i) CHECK(a.normal() == c.normal());
}
