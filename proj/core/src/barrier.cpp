#include "cbflearn/barrier.hpp"

namespace cbflearn {

double barrier(double x, double y, const Obstacle& obs) {
  const double dx = x - obs.cx;
  const double dy = y - obs.cy;
  return dx * dx + dy * dy - obs.r * obs.r;
}

double barrier(const State1& s, const Obstacle& obs) { return barrier(s.x, s.y, obs); }
double barrier(const State2& s, const Obstacle& obs) { return barrier(s.x, s.y, obs); }

Matrix barrier_gradient(const State1& s, const Obstacle& obs) {
  return Matrix::row({2.0 * (s.x - obs.cx), 2.0 * (s.y - obs.cy), 0.0});
}

}  // namespace cbflearn
