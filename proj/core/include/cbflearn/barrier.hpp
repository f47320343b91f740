#pragma once

#include "cbflearn/dynamics.hpp"
#include "cbflearn/matrix.hpp"

namespace cbflearn {

struct Obstacle {
  double cx = 0.0;
  double cy = 0.0;
  double r = 1.0;
};

// h(x) = (x-cx)^2 + (y-cy)^2 - r^2. The safe set is { h >= 0 }.
double barrier(double x, double y, const Obstacle& obs);
double barrier(const State1& s, const Obstacle& obs);
double barrier(const State2& s, const Obstacle& obs);

// dh/d(x, y, theta) = (2(x-cx), 2(y-cy), 0), as a 1x3 row.
Matrix barrier_gradient(const State1& s, const Obstacle& obs);

}  // namespace cbflearn
