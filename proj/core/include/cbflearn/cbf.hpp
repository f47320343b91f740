#pragma once

#include <optional>
#include <vector>

#include "cbflearn/barrier.hpp"
#include "cbflearn/dynamics.hpp"
#include "cbflearn/kappa.hpp"
#include "cbflearn/matrix.hpp"

namespace cbflearn {

// One linear safety constraint on the control: a_u * u >= b_rhs.
struct CBFConstraint {
  Matrix a_u;          // 1x3
  double b_rhs = 0.0;
  double psi = 0.0;    // the value fed to kappa
  int obstacle_index = -1;
  std::optional<KappaTrace> kappa_trace;
};

// First order (relative degree 1): dh/dx (f + g u) >= -kappa(h), rearranged so
// a_u = dh/dx * g and b_rhs = -kappa(h) - dh/dx * f.
CBFConstraint first_order_constraint(const State1& s, const Obstacle& obs, const KappaFn& kappa,
                                     const AffineTerms& t, bool trace = false);

// Second order (relative degree 2): with psi1 = hdot + a1 * h, the emitted
// constraint is psi1dot + kappa(psi1) >= 0; the control enters through hddot.
CBFConstraint second_order_constraint(const State2& s, const Obstacle& obs, const KappaFn& kappa,
                                      double a1, const AffineTerms& t, bool trace = false);

struct BoxBounds {
  Matrix lo;  // n x 1
  Matrix hi;  // n x 1
};

struct ControlSet {
  BoxBounds box;
  // When set, ||(u_0, u_1)|| <= norm_bound is enforced through an inscribed
  // 8-facet polytope (facet offset norm_bound * cos(pi/8)) and the box rows
  // cover only the remaining channel.
  std::optional<double> norm_bound;
};

struct ConstraintSet {
  Matrix G;  // m x n
  Matrix h;  // m x 1
  std::vector<int> cbf_rows;  // row of each entry in `constraints`
  std::vector<CBFConstraint> constraints;
};

// Stacks each a_u * u >= b_rhs as a row (-a_u | -b_rhs) of G x <= h, followed
// by the control-set rows.
ConstraintSet combine_constraints(std::vector<CBFConstraint> constraints, const ControlSet& set);

// Clamp to the box, then scale the planar channels into the norm ball if one
// is configured. Used as the fallback action when the filter is infeasible.
Matrix clamp_to_control_set(Matrix u, const ControlSet& set);

}  // namespace cbflearn
