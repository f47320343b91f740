#include "cbflearn/cbf.hpp"

#include <cmath>
#include <stdexcept>

namespace cbflearn {

CBFConstraint first_order_constraint(const State1& s, const Obstacle& obs, const KappaFn& kappa,
                                     const AffineTerms& t, bool trace) {
  const Matrix grad = barrier_gradient(s, obs);  // 1x3
  const double h = barrier(s, obs);

  CBFConstraint c;
  c.a_u = matmul(grad, t.g);
  c.psi = h;
  if (trace && kappa.trainable()) {
    c.kappa_trace = kappa.eval_traced(h);
    c.b_rhs = -c.kappa_trace->value - dot(grad.transposed(), t.f);
  } else {
    c.b_rhs = -kappa.eval(h) - dot(grad.transposed(), t.f);
  }
  return c;
}

CBFConstraint second_order_constraint(const State2& s, const Obstacle& obs, const KappaFn& kappa,
                                      double a1, const AffineTerms& t, bool trace) {
  if (!(a1 > 0.0)) throw std::invalid_argument("second_order_constraint: a1 must be positive");
  const double px = s.x - obs.cx;
  const double py = s.y - obs.cy;
  const double h = barrier(s, obs);
  const double hdot = 2.0 * (px * s.vx + py * s.vy);
  const double speed_sq = s.vx * s.vx + s.vy * s.vy;
  const double psi1 = hdot + a1 * h;

  // hddot = 2||v||^2 + 2 (p - c) . a, with the acceleration a = R(theta) u,
  // so u's coefficients come from the bottom rotation block of g.
  CBFConstraint c;
  c.a_u = Matrix(1, 3);
  for (std::size_t j = 0; j < 3; ++j)
    c.a_u(0, j) = 2.0 * (px * t.g(3, j) + py * t.g(4, j));
  c.psi = psi1;
  const double drift = 2.0 * speed_sq + a1 * hdot;
  if (trace && kappa.trainable()) {
    c.kappa_trace = kappa.eval_traced(psi1);
    c.b_rhs = -c.kappa_trace->value - drift;
  } else {
    c.b_rhs = -kappa.eval(psi1) - drift;
  }
  return c;
}

ConstraintSet combine_constraints(std::vector<CBFConstraint> constraints, const ControlSet& set) {
  if (set.box.lo.rows() != set.box.hi.rows() || set.box.lo.cols() != 1 || set.box.hi.cols() != 1)
    throw std::invalid_argument("combine_constraints: malformed box bounds");
  const std::size_t n = set.box.lo.rows();
  for (const auto& c : constraints)
    if (c.a_u.rows() != 1 || c.a_u.cols() != n)
      throw std::invalid_argument("combine_constraints: constraint width mismatch");

  std::size_t rows = constraints.size();
  if (set.norm_bound) {
    if (n < 2) throw std::invalid_argument("combine_constraints: norm bound needs 2 channels");
    rows += 8 + 2 * (n - 2);
  } else {
    rows += 2 * n;
  }

  ConstraintSet out;
  out.G = Matrix(rows, n);
  out.h = Matrix(rows, 1);
  std::size_t r = 0;
  for (auto& c : constraints) {
    for (std::size_t j = 0; j < n; ++j) out.G(r, j) = -c.a_u(0, j);
    out.h(r, 0) = -c.b_rhs;
    out.cbf_rows.push_back(static_cast<int>(r));
    ++r;
  }
  out.constraints = std::move(constraints);

  if (set.norm_bound) {
    const double d = *set.norm_bound * std::cos(M_PI / 8.0);
    for (int k = 0; k < 8; ++k) {
      const double phi = 2.0 * M_PI * k / 8.0;
      out.G(r, 0) = std::cos(phi);
      out.G(r, 1) = std::sin(phi);
      out.h(r, 0) = d;
      ++r;
    }
    for (std::size_t j = 2; j < n; ++j) {
      out.G(r, j) = 1.0;
      out.h(r, 0) = set.box.hi(j, 0);
      ++r;
      out.G(r, j) = -1.0;
      out.h(r, 0) = -set.box.lo(j, 0);
      ++r;
    }
  } else {
    for (std::size_t j = 0; j < n; ++j) {
      out.G(r, j) = 1.0;
      out.h(r, 0) = set.box.hi(j, 0);
      ++r;
      out.G(r, j) = -1.0;
      out.h(r, 0) = -set.box.lo(j, 0);
      ++r;
    }
  }
  return out;
}

Matrix clamp_to_control_set(Matrix u, const ControlSet& set) {
  const std::size_t n = u.rows();
  for (std::size_t j = 0; j < n; ++j) {
    u(j, 0) = std::min(std::max(u(j, 0), set.box.lo(j, 0)), set.box.hi(j, 0));
  }
  if (set.norm_bound && n >= 2) {
    const double norm = std::hypot(u(0, 0), u(1, 0));
    if (norm > *set.norm_bound && norm > 0.0) {
      const double s = *set.norm_bound / norm;
      u(0, 0) *= s;
      u(1, 0) *= s;
    }
  }
  return u;
}

}  // namespace cbflearn
