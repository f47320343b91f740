#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include "cbflearn/matrix.hpp"

namespace cbflearn {

struct NumericalError : std::runtime_error {
  explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

// First-order car: controls are body-frame velocities (v_x, v_y, omega).
struct State1 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
};

// Second-order car: controls are body-frame accelerations (u_x, u_y, tau_c).
// Velocities (vx, vy) are stored in the world frame.
struct State2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;
  double vx = 0.0;
  double vy = 0.0;
  double omega = 0.0;
};

// Wraps an angle to (-pi, pi].
double wrap_angle(double theta);

struct AffineTerms {
  Matrix f;  // n x 1
  Matrix g;  // n x 3
};

// Control-affine decomposition xdot = f(x) + g(x) u.
// First order: f = 0 and g is the rotation block of the kinematics.
AffineTerms affine_terms(const State1& s);
// Second order: f passes world-frame velocities through; g injects the
// body-frame accelerations via the same rotation block.
AffineTerms affine_terms(const State2& s);

// Explicit Euler step; heading re-wrapped at the step boundary.
// Throws NumericalError if the result is not finite.
State1 step(const State1& s, const Matrix& u, double dt);
State2 step(const State2& s, const Matrix& u, double dt);

Matrix to_vector(const State1& s);
Matrix to_vector(const State2& s);
State1 state1_from(const std::vector<double>& v);
State2 state2_from(const std::vector<double>& v);
std::vector<double> to_std_vector(const State1& s);
std::vector<double> to_std_vector(const State2& s);

}  // namespace cbflearn
