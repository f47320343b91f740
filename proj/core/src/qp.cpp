#include "cbflearn/qp.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "cbflearn/linalg.hpp"

namespace cbflearn {

namespace {

constexpr double kFeasTol = 1e-9;
constexpr double kDualTol = 1e-10;
constexpr double kStepTol = 1e-11;
constexpr double kActiveTol = 1e-8;
constexpr double kStrictTol = 1e-7;  // strict-complementarity threshold

struct ActiveSetOutcome {
  bool ok = false;
  Matrix z;
  Matrix nu;      // p x 1
  Matrix lambda;  // m x 1
};

double row_dot(const Matrix& m, std::size_t row, const Matrix& x) {
  double s = 0.0;
  for (std::size_t j = 0; j < m.cols(); ++j) s += m(row, j) * x(j, 0);
  return s;
}

// Primal active-set iteration from a feasible start. Each round solves the
// equality-constrained subproblem directly through its (symmetric) KKT
// system, adds the first blocking row on a partial step, and drops the most
// negative multiplier at a stationary point.
ActiveSetOutcome active_set_solve(const QPSpec& spec, Matrix x) {
  const std::size_t n = spec.num_vars();
  const std::size_t p = spec.num_eq();
  const std::size_t m = spec.num_ineq();

  std::vector<std::size_t> work;
  std::vector<char> in_work(m, 0);
  ActiveSetOutcome out;

  const int max_iter = 60 + 12 * static_cast<int>(m);
  for (int iter = 0; iter < max_iter; ++iter) {
    const std::size_t k = work.size();
    const std::size_t dim = n + p + k;
    Matrix K(dim, dim);
    Matrix rhs(dim, 1);
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = 0; j < n; ++j) K(i, j) = spec.Q(i, j);
      rhs(i, 0) = -spec.q(i, 0);
    }
    for (std::size_t e = 0; e < p; ++e) {
      for (std::size_t j = 0; j < n; ++j) {
        K(n + e, j) = spec.A(e, j);
        K(j, n + e) = spec.A(e, j);
      }
      rhs(n + e, 0) = spec.b(e, 0);
    }
    for (std::size_t w = 0; w < k; ++w) {
      const std::size_t row = work[w];
      for (std::size_t j = 0; j < n; ++j) {
        K(n + p + w, j) = spec.G(row, j);
        K(j, n + p + w) = spec.G(row, j);
      }
      rhs(n + p + w, 0) = spec.h(row, 0);
    }

    Matrix sol;
    bool singular = false;
    try {
      sol = solve_linear(K, rhs);
    } catch (const SingularSystemError&) {
      singular = true;
    }
    if (singular) {
      if (work.empty()) return out;  // Q singular on the equality nullspace
      in_work[work.back()] = 0;      // dependent working set, drop newest row
      work.pop_back();
      continue;
    }

    Matrix d(n, 1);
    for (std::size_t i = 0; i < n; ++i) d(i, 0) = sol(i, 0) - x(i, 0);

    if (d.inf_norm() <= kStepTol * (1.0 + x.inf_norm())) {
      double min_lambda = 0.0;
      std::size_t drop = 0;
      bool have_drop = false;
      for (std::size_t w = 0; w < k; ++w) {
        const double lam = sol(n + p + w, 0);
        if (lam < min_lambda) {
          min_lambda = lam;
          drop = w;
          have_drop = true;
        }
      }
      if (!have_drop || min_lambda >= -kDualTol) {
        out.ok = true;
        out.z = x;
        out.nu = Matrix(p, 1);
        for (std::size_t e = 0; e < p; ++e) out.nu(e, 0) = sol(n + e, 0);
        out.lambda = Matrix(m, 1);
        for (std::size_t w = 0; w < k; ++w)
          out.lambda(work[w], 0) = std::max(sol(n + p + w, 0), 0.0);
        return out;
      }
      in_work[work[drop]] = 0;
      work.erase(work.begin() + static_cast<std::ptrdiff_t>(drop));
      continue;
    }

    double alpha = 1.0;
    std::ptrdiff_t blocking = -1;
    for (std::size_t i = 0; i < m; ++i) {
      if (in_work[i]) continue;
      const double gd = row_dot(spec.G, i, d);
      if (gd <= 1e-13) continue;
      const double slack = spec.h(i, 0) - row_dot(spec.G, i, x);
      const double a = slack / gd;
      if (a < alpha) {
        alpha = std::max(a, 0.0);
        blocking = static_cast<std::ptrdiff_t>(i);
      }
    }
    for (std::size_t i = 0; i < n; ++i) x(i, 0) += alpha * d(i, 0);
    if (blocking >= 0 && alpha < 1.0) {
      work.push_back(static_cast<std::size_t>(blocking));
      in_work[static_cast<std::size_t>(blocking)] = 1;
    }
  }
  return out;  // iteration cap
}

struct Phase1Result {
  enum class Status { kFeasible, kInfeasible, kDegenerate } status;
  Matrix x;
  InfeasibilityReport report;
};

// Elastic feasibility program: min eps/2 ||x||^2 + 1/2 t^2 + t subject to
// G x - t <= h, t >= 0 and the original equalities. Feasibility of the
// original program is equivalent to an optimal t of zero.
Phase1Result find_feasible_point(const QPSpec& spec) {
  const std::size_t n = spec.num_vars();
  const std::size_t p = spec.num_eq();
  const std::size_t m = spec.num_ineq();

  Matrix x0(n, 1);
  if (p > 0) {
    Matrix aat = matmul(spec.A, spec.A.transposed());
    Matrix w;
    try {
      w = solve_linear(aat, spec.b);
    } catch (const SingularSystemError&) {
      return {Phase1Result::Status::kDegenerate, {}, {}};
    }
    x0 = matmul(spec.A.transposed(), w);
  }

  double worst = 0.0;
  std::size_t worst_row = 0;
  for (std::size_t i = 0; i < m; ++i) {
    const double v = row_dot(spec.G, i, x0) - spec.h(i, 0);
    if (v > worst) {
      worst = v;
      worst_row = i;
    }
  }
  if (worst <= kFeasTol) return {Phase1Result::Status::kFeasible, x0, {}};

  QPSpec aux;
  const std::size_t na = n + 1;
  aux.Q = Matrix(na, na);
  for (std::size_t i = 0; i < n; ++i) aux.Q(i, i) = 1e-6;
  aux.Q(n, n) = 1.0;
  aux.q = Matrix(na, 1);
  aux.q(n, 0) = 1.0;
  aux.A = Matrix(p, na);
  for (std::size_t e = 0; e < p; ++e)
    for (std::size_t j = 0; j < n; ++j) aux.A(e, j) = spec.A(e, j);
  aux.b = spec.b;
  aux.G = Matrix(m + 1, na);
  aux.h = Matrix(m + 1, 1);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < n; ++j) aux.G(i, j) = spec.G(i, j);
    aux.G(i, n) = -1.0;
    aux.h(i, 0) = spec.h(i, 0);
  }
  aux.G(m, n) = -1.0;  // -t <= 0
  aux.h(m, 0) = 0.0;

  Matrix start(na, 1);
  for (std::size_t i = 0; i < n; ++i) start(i, 0) = x0(i, 0);
  start(n, 0) = worst + 1.0;

  const ActiveSetOutcome aux_out = active_set_solve(aux, start);
  if (!aux_out.ok) return {Phase1Result::Status::kDegenerate, {}, {}};

  const double t_star = aux_out.z(n, 0);
  Matrix x(n, 1);
  for (std::size_t i = 0; i < n; ++i) x(i, 0) = aux_out.z(i, 0);
  if (t_star > 1e-9) {
    InfeasibilityReport report;
    double w2 = -1.0;
    for (std::size_t i = 0; i < m; ++i) {
      const double v = row_dot(spec.G, i, x) - spec.h(i, 0);
      if (v > w2) {
        w2 = v;
        report.worst_row = i;
        report.violation = v;
      }
    }
    if (w2 < 0.0) {
      report.worst_row = worst_row;
      report.violation = worst;
    }
    return {Phase1Result::Status::kInfeasible, {}, report};
  }
  return {Phase1Result::Status::kFeasible, x, {}};
}

}  // namespace

void QPSpec::validate() const {
  const std::size_t n = Q.rows();
  if (n == 0 || Q.cols() != n) throw std::invalid_argument("QPSpec: Q must be square");
  if (q.rows() != n || q.cols() != 1) throw std::invalid_argument("QPSpec: q must be n x 1");
  if (A.rows() > 0) {
    if (A.cols() != n) throw std::invalid_argument("QPSpec: A column mismatch");
    if (b.rows() != A.rows() || b.cols() != 1)
      throw std::invalid_argument("QPSpec: b must match A rows");
  } else if (b.rows() != 0) {
    throw std::invalid_argument("QPSpec: b given without A");
  }
  if (G.rows() > 0) {
    if (G.cols() != n) throw std::invalid_argument("QPSpec: G column mismatch");
    if (h.rows() != G.rows() || h.cols() != 1)
      throw std::invalid_argument("QPSpec: h must match G rows");
  } else if (h.rows() != 0) {
    throw std::invalid_argument("QPSpec: h given without G");
  }
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(Q(i, j) - Q(j, i)) > 1e-9 * (1.0 + std::abs(Q(i, j))))
        throw std::invalid_argument("QPSpec: Q must be symmetric");
}

QPResult solve(const QPSpec& spec) {
  spec.validate();
  QPResult result;

  const Phase1Result phase1 = find_feasible_point(spec);
  if (phase1.status == Phase1Result::Status::kDegenerate) {
    result.status = QPStatus::kDegenerate;
    return result;
  }
  if (phase1.status == Phase1Result::Status::kInfeasible) {
    result.status = QPStatus::kInfeasible;
    result.infeasibility = phase1.report;
    return result;
  }

  const ActiveSetOutcome out = active_set_solve(spec, phase1.x);
  if (!out.ok) {
    result.status = QPStatus::kDegenerate;
    return result;
  }

  QPSolution sol;
  sol.z = out.z;
  sol.lambda = out.lambda;
  sol.nu = out.nu;

  const std::size_t n = spec.num_vars();
  const std::size_t p = spec.num_eq();
  const std::size_t m = spec.num_ineq();

  Matrix stat = matmul(spec.Q, sol.z) + spec.q;
  if (p > 0) stat += matmul(spec.A.transposed(), sol.nu);
  if (m > 0) stat += matmul(spec.G.transposed(), sol.lambda);
  sol.stationarity_residual = stat.inf_norm();

  double feas = 0.0;
  for (std::size_t e = 0; e < p; ++e)
    feas = std::max(feas, std::abs(row_dot(spec.A, e, sol.z) - spec.b(e, 0)));
  double compl_res = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    const double slack = spec.h(i, 0) - row_dot(spec.G, i, sol.z);
    feas = std::max(feas, -std::min(slack, 0.0));
    compl_res = std::max(compl_res, std::abs(sol.lambda(i, 0) * slack));
    if (std::abs(slack) <= kActiveTol * (1.0 + std::abs(spec.h(i, 0)))) sol.active_set.push_back(i);
  }
  sol.feasibility_residual = feas;
  sol.complementarity_residual = compl_res;
  (void)n;

  result.status = QPStatus::kOptimal;
  result.solution = sol;
  return result;
}

QPBackwardResult backward(const QPSpec& spec, const QPSolution& sol, const Matrix& dL_dz) {
  const std::size_t n = spec.num_vars();
  const std::size_t p = spec.num_eq();
  const std::size_t m = spec.num_ineq();
  if (dL_dz.rows() != n || dL_dz.cols() != 1)
    throw std::invalid_argument("qp backward: dL_dz must be n x 1");

  QPBackwardResult result;
  result.grads.Q = Matrix(n, n);
  result.grads.q = Matrix(n, 1);
  result.grads.A = Matrix(p, n);
  result.grads.b = Matrix(p, 1);
  result.grads.G = Matrix(m, n);
  result.grads.h = Matrix(m, 1);

  // Strictly active rows (positive dual, tight). Weakly active rows (dual and
  // slack both near zero) are treated as inactive and flagged, matching the
  // convention that the gradient there is approximate.
  std::vector<std::size_t> act;
  for (std::size_t i = 0; i < m; ++i) {
    const double slack = spec.h(i, 0) - row_dot(spec.G, i, sol.z);
    const bool tight = std::abs(slack) <= kStrictTol * (1.0 + std::abs(spec.h(i, 0)));
    const bool positive_dual = sol.lambda(i, 0) > kStrictTol;
    if (positive_dual && tight) {
      act.push_back(i);
    } else if (tight || positive_dual) {
      result.grads.approximate = true;
    }
  }

  const std::size_t k = act.size();
  const std::size_t dim = n + k + p;
  Matrix K(dim, dim);
  Matrix rhs(dim, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) K(i, j) = spec.Q(i, j);
    rhs(i, 0) = -dL_dz(i, 0);
  }
  for (std::size_t w = 0; w < k; ++w) {
    for (std::size_t j = 0; j < n; ++j) {
      K(n + w, j) = spec.G(act[w], j);
      K(j, n + w) = spec.G(act[w], j);
    }
  }
  for (std::size_t e = 0; e < p; ++e) {
    for (std::size_t j = 0; j < n; ++j) {
      K(n + k + e, j) = spec.A(e, j);
      K(j, n + k + e) = spec.A(e, j);
    }
  }

  Matrix d;
  try {
    d = solve_linear(K, rhs);
  } catch (const SingularSystemError&) {
    result.ok = false;
    return result;
  }

  Matrix dz(n, 1);
  for (std::size_t i = 0; i < n; ++i) dz(i, 0) = d(i, 0);

  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      result.grads.Q(i, j) = 0.5 * (dz(i, 0) * sol.z(j, 0) + sol.z(i, 0) * dz(j, 0));
  result.grads.q = dz;
  for (std::size_t e = 0; e < p; ++e) {
    const double dnu = d(n + k + e, 0);
    for (std::size_t j = 0; j < n; ++j)
      result.grads.A(e, j) = dnu * sol.z(j, 0) + sol.nu(e, 0) * dz(j, 0);
    result.grads.b(e, 0) = -dnu;
  }
  for (std::size_t w = 0; w < k; ++w) {
    const std::size_t i = act[w];
    const double dla = d(n + w, 0);
    for (std::size_t j = 0; j < n; ++j)
      result.grads.G(i, j) = dla * sol.z(j, 0) + sol.lambda(i, 0) * dz(j, 0);
    result.grads.h(i, 0) = -dla;
  }

  result.ok = true;
  return result;
}

RectifyResult rectify(const Matrix& u_nominal, const Matrix& G, const Matrix& h,
                      const ControlSet& control_set) {
  const std::size_t n = u_nominal.rows();
  if (n == 0 || u_nominal.cols() != 1)
    throw std::invalid_argument("rectify: u_nominal must be n x 1");

  RectifyResult out;
  out.u_nominal = u_nominal;
  out.spec.Q = Matrix::identity(n) * 2.0;
  out.spec.q = u_nominal * -2.0;
  out.spec.A = Matrix(0, n);
  out.spec.b = Matrix(0, 1);
  out.spec.G = G;
  out.spec.h = h;

  QPResult r = solve(out.spec);
  out.status = r.status;
  out.solution = std::move(r.solution);
  out.infeasibility = r.infeasibility;
  if (out.status == QPStatus::kOptimal) {
    out.u_safe = out.solution.z;
  } else {
    out.u_safe = clamp_to_control_set(u_nominal, control_set);
  }
  return out;
}

}  // namespace cbflearn
