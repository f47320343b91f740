#pragma once

#include <cstddef>
#include <vector>

#include "cbflearn/cbf.hpp"
#include "cbflearn/matrix.hpp"

namespace cbflearn {

// min_x 1/2 x'Qx + q'x  s.t.  Ax = b, Gx <= h.
// A/b may be empty (0 x n / 0 x 1).
struct QPSpec {
  Matrix Q;  // n x n, symmetric PSD
  Matrix q;  // n x 1
  Matrix A;  // p x n
  Matrix b;  // p x 1
  Matrix G;  // m x n
  Matrix h;  // m x 1

  std::size_t num_vars() const { return Q.rows(); }
  std::size_t num_eq() const { return A.rows(); }
  std::size_t num_ineq() const { return G.rows(); }
  void validate() const;  // throws std::invalid_argument on inconsistent dims
};

struct QPSolution {
  Matrix z;       // n x 1 primal
  Matrix lambda;  // m x 1 inequality duals, >= 0
  Matrix nu;      // p x 1 equality duals
  std::vector<std::size_t> active_set;  // rows with G_i z = h_i
  double stationarity_residual = 0.0;
  double feasibility_residual = 0.0;
  double complementarity_residual = 0.0;
};

enum class QPStatus { kOptimal, kInfeasible, kDegenerate };

struct InfeasibilityReport {
  std::size_t worst_row = 0;  // most-violated inequality at the closest point found
  double violation = 0.0;
};

struct QPResult {
  QPStatus status = QPStatus::kDegenerate;
  QPSolution solution;
  InfeasibilityReport infeasibility;
};

// Primal active-set solver with LU-factored KKT systems. Infeasible problems
// are detected through an elastic phase-one program and reported with the
// most-violated row.
QPResult solve(const QPSpec& spec);

struct QPGradients {
  Matrix Q, q, A, b, G, h;
  // True when a weakly active constraint (near-zero dual and slack) was
  // treated as inactive, making the gradient approximate.
  bool approximate = false;
};

struct QPBackwardResult {
  bool ok = false;  // false: singular KKT system, caller may skip the update
  QPGradients grads;
};

// Implicit differentiation of the KKT conditions restricted to the strictly
// active set: gradients of a downstream scalar loss with upstream d(loss)/dz.
QPBackwardResult backward(const QPSpec& spec, const QPSolution& sol, const Matrix& dL_dz);

// Min-norm action filter: min ||u - u_nominal||^2 s.t. G u <= h, i.e. the QP
// with Q = 2I and q = -2 u_nominal. On infeasibility the fallback action is
// the nominal clamped to the control set.
struct RectifyResult {
  QPStatus status = QPStatus::kDegenerate;
  Matrix u_safe;
  Matrix u_nominal;
  QPSpec spec;
  QPSolution solution;
  InfeasibilityReport infeasibility;
  bool infeasible() const { return status == QPStatus::kInfeasible; }
};

RectifyResult rectify(const Matrix& u_nominal, const Matrix& G, const Matrix& h,
                      const ControlSet& control_set);

}  // namespace cbflearn
