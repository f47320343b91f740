#include "cbflearn/dynamics.hpp"

#include <cmath>

namespace cbflearn {

double wrap_angle(double theta) {
  double w = std::remainder(theta, 2.0 * M_PI);
  if (w <= -M_PI) w += 2.0 * M_PI;
  return w;
}

AffineTerms affine_terms(const State1& s) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  AffineTerms t;
  t.f = Matrix(3, 1);
  t.g = Matrix::from_rows({{c, -sn, 0.0}, {sn, c, 0.0}, {0.0, 0.0, 1.0}});
  return t;
}

AffineTerms affine_terms(const State2& s) {
  const double c = std::cos(s.theta);
  const double sn = std::sin(s.theta);
  AffineTerms t;
  t.f = Matrix(6, 1);
  t.f(0, 0) = s.vx;
  t.f(1, 0) = s.vy;
  t.f(2, 0) = s.omega;
  t.g = Matrix(6, 3);
  t.g(3, 0) = c;
  t.g(3, 1) = -sn;
  t.g(4, 0) = sn;
  t.g(4, 1) = c;
  t.g(5, 2) = 1.0;
  return t;
}

namespace {

void check_control(const Matrix& u) {
  if (u.rows() != 3 || u.cols() != 1) throw std::invalid_argument("step: control must be 3x1");
}

}  // namespace

State1 step(const State1& s, const Matrix& u, double dt) {
  check_control(u);
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const AffineTerms t = affine_terms(s);
  const Matrix xdot = t.f + matmul(t.g, u);
  State1 out;
  out.x = s.x + dt * xdot(0, 0);
  out.y = s.y + dt * xdot(1, 0);
  out.theta = wrap_angle(s.theta + dt * xdot(2, 0));
  if (!std::isfinite(out.x) || !std::isfinite(out.y) || !std::isfinite(out.theta))
    throw NumericalError("step: non-finite first-order state");
  return out;
}

State2 step(const State2& s, const Matrix& u, double dt) {
  check_control(u);
  if (!(dt > 0.0)) throw std::invalid_argument("step: dt must be positive");
  const AffineTerms t = affine_terms(s);
  const Matrix xdot = t.f + matmul(t.g, u);
  State2 out;
  out.x = s.x + dt * xdot(0, 0);
  out.y = s.y + dt * xdot(1, 0);
  out.theta = wrap_angle(s.theta + dt * xdot(2, 0));
  out.vx = s.vx + dt * xdot(3, 0);
  out.vy = s.vy + dt * xdot(4, 0);
  out.omega = s.omega + dt * xdot(5, 0);
  if (!std::isfinite(out.x) || !std::isfinite(out.y) || !std::isfinite(out.theta) ||
      !std::isfinite(out.vx) || !std::isfinite(out.vy) || !std::isfinite(out.omega))
    throw NumericalError("step: non-finite second-order state");
  return out;
}

Matrix to_vector(const State1& s) { return Matrix::column({s.x, s.y, s.theta}); }

Matrix to_vector(const State2& s) {
  return Matrix::column({s.x, s.y, s.theta, s.vx, s.vy, s.omega});
}

State1 state1_from(const std::vector<double>& v) {
  if (v.size() < 3) throw std::invalid_argument("state1_from: need 3 components");
  return State1{v[0], v[1], v[2]};
}

State2 state2_from(const std::vector<double>& v) {
  if (v.size() < 6) throw std::invalid_argument("state2_from: need 6 components");
  return State2{v[0], v[1], v[2], v[3], v[4], v[5]};
}

std::vector<double> to_std_vector(const State1& s) { return {s.x, s.y, s.theta}; }

std::vector<double> to_std_vector(const State2& s) {
  return {s.x, s.y, s.theta, s.vx, s.vy, s.omega};
}

}  // namespace cbflearn
