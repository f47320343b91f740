#include "cbflearn/verify.hpp"

#include <cmath>
#include <functional>
#include <sstream>

#include "cbflearn/kappa.hpp"
#include "cbflearn/linalg.hpp"
#include "cbflearn/qp.hpp"
#include "cbflearn/rollout.hpp"
#include "cbflearn/tape.hpp"

namespace cbflearn {

namespace {

Matrix random_matrix(Rng& rng, std::size_t r, std::size_t c, double lo = -1.0, double hi = 1.0) {
  Matrix m(r, c);
  for (std::size_t i = 0; i < m.size(); ++i) m[i] = rng.uniform(lo, hi);
  return m;
}

// Random strictly convex QP with a known interior point, so it is feasible
// and (generically) non-degenerate.
QPSpec random_qp(Rng& rng, std::size_t n, std::size_t m) {
  QPSpec spec;
  const Matrix b = random_matrix(rng, n, n);
  spec.Q = matmul(b.transposed(), b);
  for (std::size_t i = 0; i < n; ++i) spec.Q(i, i) += 0.5;
  spec.q = random_matrix(rng, n, 1);
  spec.A = Matrix(0, n);
  spec.b = Matrix(0, 1);
  spec.G = random_matrix(rng, m, n);
  const Matrix x0 = random_matrix(rng, n, 1, -0.5, 0.5);
  spec.h = matmul(spec.G, x0);
  for (std::size_t i = 0; i < m; ++i) spec.h(i, 0) += rng.uniform(0.05, 1.0);
  return spec;
}

bool non_degenerate(const QPSpec& spec, const QPSolution& sol) {
  for (std::size_t i = 0; i < spec.num_ineq(); ++i) {
    double slack = spec.h(i, 0);
    for (std::size_t j = 0; j < spec.num_vars(); ++j) slack -= spec.G(i, j) * sol.z(j, 0);
    const bool tight = std::abs(slack) <= 1e-6;
    const bool positive = sol.lambda(i, 0) > 1e-6;
    if (tight != positive) return false;
  }
  return true;
}

PropertyResult check_tape_gradients(Rng& rng, int trials) {
  PropertyResult res{"tape_gradients_match_finite_differences", true, ""};
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t r = 1 + rng.index(3);
    const std::size_t c = 1 + rng.index(3);
    Matrix a = random_matrix(rng, r, c);
    Matrix b = random_matrix(rng, r, c);
    // keep clear of the |.| kink
    for (std::size_t i = 0; i < a.size(); ++i)
      if (std::abs(a[i]) < 1e-3) a[i] += a[i] >= 0 ? 2e-3 : -2e-3;

    const int variant = trial % 5;
    auto build = [&](Tape& t, const Matrix& av) {
      const int an = t.leaf(av);
      const int bn = t.leaf(b);
      switch (variant) {
        case 0: return t.sum_squares(t.add(an, bn));
        case 1: return t.sum(t.mul(t.abs(an), bn));
        case 2: return t.sum_squares(t.softplus(an));
        case 3: return t.sum(t.tanh(an));
        default: return t.sum_squares(t.matmul(an, t.leaf(b.transposed())));
      }
    };

    Tape tape;
    const int root = build(tape, a);
    const std::vector<Matrix> adj = tape.backward(root);
    const Matrix& grad = adj[0];

    const double eps = 1e-6;
    for (std::size_t i = 0; i < a.size(); ++i) {
      Matrix ap = a, am = a;
      ap[i] += eps;
      am[i] -= eps;
      Tape tp, tm;
      const double fp = tp.value(build(tp, ap))(0, 0);
      const double fm = tm.value(build(tm, am))(0, 0);
      const double fd = (fp - fm) / (2.0 * eps);
      const double rel = std::abs(grad[i] - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
    }
  }
  std::ostringstream os;
  os << "worst rel err " << worst;
  res.detail = os.str();
  res.passed = worst < 1e-5;
  return res;
}

PropertyResult check_linear_solve(Rng& rng, int trials) {
  PropertyResult res{"linear_solve_reconstructs_rhs", true, ""};
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.index(8);
    Matrix a = random_matrix(rng, n, n);
    for (std::size_t i = 0; i < n; ++i) a(i, i) += 3.0;  // well conditioned
    const Matrix rhs = random_matrix(rng, n, 1);
    const Matrix x = solve_linear(a, rhs);
    worst = std::max(worst, (matmul(a, x) - rhs).inf_norm());
  }
  std::ostringstream os;
  os << "worst residual " << worst;
  res.detail = os.str();
  res.passed = worst <= 1e-9;
  return res;
}

PropertyResult check_qp_kkt(Rng& rng, int trials) {
  PropertyResult res{"qp_kkt_residuals", true, ""};
  double worst = 0.0;
  int solved = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.index(4);
    const std::size_t m = 1 + rng.index(10);
    const QPSpec spec = random_qp(rng, n, m);
    const QPResult r = solve(spec);
    if (r.status != QPStatus::kOptimal) continue;
    ++solved;
    worst = std::max({worst, r.solution.stationarity_residual, r.solution.feasibility_residual,
                      r.solution.complementarity_residual});
  }
  std::ostringstream os;
  os << solved << "/" << trials << " solved, worst residual " << worst;
  res.detail = os.str();
  res.passed = solved == trials && worst <= 1e-8;
  return res;
}

PropertyResult check_qp_grid(Rng& rng, int trials) {
  PropertyResult res{"qp_matches_grid_search", true, ""};
  double worst = 0.0;
  for (int trial = 0; trial < trials; ++trial) {
    QPSpec spec = random_qp(rng, 2, 2 + rng.index(5));
    // bound the feasible region with a box so the grid is finite
    const double box = 2.0;
    Matrix G(spec.G.rows() + 4, 2), h(spec.h.rows() + 4, 1);
    for (std::size_t i = 0; i < spec.G.rows(); ++i) {
      G(i, 0) = spec.G(i, 0);
      G(i, 1) = spec.G(i, 1);
      h(i, 0) = spec.h(i, 0);
    }
    const std::size_t base = spec.G.rows();
    G(base, 0) = 1;
    h(base, 0) = box;
    G(base + 1, 0) = -1;
    h(base + 1, 0) = box;
    G(base + 2, 1) = 1;
    h(base + 2, 0) = box;
    G(base + 3, 1) = -1;
    h(base + 3, 0) = box;
    spec.G = G;
    spec.h = h;

    const QPResult r = solve(spec);
    if (r.status != QPStatus::kOptimal) {
      res.passed = false;
      res.detail = "random spec unexpectedly not optimal";
      return res;
    }

    const int grid = 200;
    double best = 1e300;
    double bx = 0, by = 0;
    for (int i = 0; i <= grid; ++i) {
      for (int j = 0; j <= grid; ++j) {
        const double x = -box + 2.0 * box * i / grid;
        const double y = -box + 2.0 * box * j / grid;
        bool feasible = true;
        for (std::size_t k = 0; k < spec.G.rows(); ++k) {
          if (spec.G(k, 0) * x + spec.G(k, 1) * y > spec.h(k, 0) + 1e-12) {
            feasible = false;
            break;
          }
        }
        if (!feasible) continue;
        const double f = 0.5 * (spec.Q(0, 0) * x * x + 2.0 * spec.Q(0, 1) * x * y +
                                spec.Q(1, 1) * y * y) +
                         spec.q(0, 0) * x + spec.q(1, 0) * y;
        if (f < best) {
          best = f;
          bx = x;
          by = y;
        }
      }
    }
    const double cell = 2.0 * box / grid;
    const double dist = std::hypot(r.solution.z(0, 0) - bx, r.solution.z(1, 0) - by);
    worst = std::max(worst, dist / cell);
  }
  std::ostringstream os;
  os << "worst primal offset " << worst << " grid cells";
  res.detail = os.str();
  res.passed = worst <= 1.5;  // within grid resolution (diagonal slack)
  return res;
}

PropertyResult check_qp_backward(Rng& rng, int trials) {
  PropertyResult res{"qp_backward_matches_finite_differences", true, ""};
  double worst = 0.0;
  int tested = 0;
  for (int trial = 0; trial < trials; ++trial) {
    const std::size_t n = 1 + rng.index(4);
    const std::size_t m = 1 + rng.index(10);
    QPSpec spec = random_qp(rng, n, m);
    const QPResult r = solve(spec);
    if (r.status != QPStatus::kOptimal || !non_degenerate(spec, r.solution)) continue;
    const Matrix c = random_matrix(rng, n, 1);
    const QPBackwardResult back = backward(spec, r.solution, c);
    if (!back.ok) continue;
    ++tested;

    auto loss_at = [&](const QPSpec& s) {
      const QPResult rr = solve(s);
      if (rr.status != QPStatus::kOptimal) return std::nan("");
      return dot(c, rr.solution.z);
    };
    const double eps = 1e-5;
    auto fd_check = [&](double analytic, std::function<void(QPSpec&, double)> bump) {
      QPSpec sp = spec, sm = spec;
      bump(sp, eps);
      bump(sm, -eps);
      const double lp = loss_at(sp), lm = loss_at(sm);
      if (std::isnan(lp) || std::isnan(lm)) return;
      const double fd = (lp - lm) / (2.0 * eps);
      const double rel = std::abs(analytic - fd) / std::max(1.0, std::abs(fd));
      worst = std::max(worst, rel);
    };

    for (std::size_t i = 0; i < n; ++i)
      fd_check(back.grads.q(i, 0), [i](QPSpec& s, double e) { s.q(i, 0) += e; });
    for (std::size_t i = 0; i < m; ++i)
      fd_check(back.grads.h(i, 0), [i](QPSpec& s, double e) { s.h(i, 0) += e; });
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < n; ++j)
        fd_check(back.grads.G(i, j), [i, j](QPSpec& s, double e) { s.G(i, j) += e; });
    for (std::size_t i = 0; i < n; ++i)
      fd_check(back.grads.Q(i, i), [i](QPSpec& s, double e) { s.Q(i, i) += e; });
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i + 1; j < n; ++j)
        fd_check(back.grads.Q(i, j) + back.grads.Q(j, i), [i, j](QPSpec& s, double e) {
          s.Q(i, j) += e;
          s.Q(j, i) += e;
        });
  }
  std::ostringstream os;
  os << tested << " specs, worst rel err " << worst;
  res.detail = os.str();
  res.passed = tested >= trials / 4 && worst < 1e-4;
  return res;
}

PropertyResult check_kappa_monotone(Rng& rng, int draws, int pairs_per_draw) {
  PropertyResult res{"kappa_is_class_k", true, ""};
  double worst_margin = 1e300;
  double worst_zero = 0.0;
  for (int d = 0; d < draws; ++d) {
    const KappaNet net = KappaNet::make(7, 0.01, rng);
    worst_zero = std::max(worst_zero, std::abs(net.eval(0.0)));
    for (int p = 0; p < pairs_per_draw; ++p) {
      double z1 = rng.uniform(-4.0, 4.0);
      double z2 = rng.uniform(-4.0, 4.0);
      if (z1 > z2) std::swap(z1, z2);
      if (z2 - z1 < 1e-9) z2 += 1e-6;
      const double margin = net.eval(z2) - net.eval(z1) - net.lambda0() * (z2 - z1);
      worst_margin = std::min(worst_margin, margin);
    }
  }
  std::ostringstream os;
  os << "worst strictness margin " << worst_margin << ", worst |kappa(0)| " << worst_zero;
  res.detail = os.str();
  res.passed = worst_margin >= -1e-12 && worst_zero <= 1e-12;
  return res;
}

PropertyResult check_kappa_gradients(Rng& rng, int draws) {
  PropertyResult res{"kappa_gradients_match_finite_differences", true, ""};
  double worst = 0.0;
  for (int d = 0; d < draws; ++d) {
    KappaNet net = KappaNet::make(7, 0.01, rng);
    const double z = rng.uniform(-2.0, 2.0);
    const KappaTrace trace = net.eval_traced(z);
    const std::vector<Matrix> adj = trace.tape.backward(trace.out);

    std::vector<Matrix*> params = net.params();
    const double eps = 1e-6;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
      Matrix& p = *params[pi];
      const Matrix& g = adj[static_cast<std::size_t>(trace.param_nodes[pi])];
      for (std::size_t i = 0; i < p.size(); ++i) {
        if (std::abs(p[i]) < 1e-4) continue;  // |.| kink exclusion
        const double keep = p[i];
        p[i] = keep + eps;
        const double fp = net.eval(z);
        p[i] = keep - eps;
        const double fm = net.eval(z);
        p[i] = keep;
        const double fd = (fp - fm) / (2.0 * eps);
        const double rel = std::abs(g[i] - fd) / std::max(1.0, std::abs(fd));
        worst = std::max(worst, rel);
      }
    }
  }
  std::ostringstream os;
  os << "worst rel err " << worst;
  res.detail = os.str();
  res.passed = worst < 1e-5;
  return res;
}

PropertyResult check_forward_invariance(int seeds) {
  PropertyResult res{"discrete_forward_invariance", true, ""};
  const ScenarioConfig cfg = make_scenario("optimality");
  double worst_h = 1e300;
  int violations = 0;
  int infeasible = 0;
  for (int s = 0; s < seeds; ++s) {
    const EpisodeLog log = rollout_baseline(cfg, 1000 + static_cast<std::uint64_t>(s));
    if (log.infeasible_steps > 0) {
      infeasible += log.infeasible_steps;
      continue;
    }
    worst_h = std::min(worst_h, log.h_min);
    violations += log.violations;
  }
  std::ostringstream os;
  os << "min h " << worst_h << ", violations " << violations << ", infeasible steps "
     << infeasible;
  res.detail = os.str();
  res.passed = violations == 0 && worst_h >= -0.1 * 0.02 * 5.0;
  return res;
}

}  // namespace

std::vector<PropertyResult> run_property_suite(const VerifySettings& settings) {
  Rng rng(settings.seed);
  const int scale = settings.quick ? 1 : 10;
  std::vector<PropertyResult> out;
  out.push_back(check_tape_gradients(rng, 10 * scale));
  out.push_back(check_linear_solve(rng, 20 * scale));
  out.push_back(check_qp_kkt(rng, 50 * scale));
  out.push_back(check_qp_grid(rng, settings.quick ? 5 : 40));
  out.push_back(check_qp_backward(rng, 20 * scale));
  out.push_back(check_kappa_monotone(rng, 100 * scale, 10));
  out.push_back(check_kappa_gradients(rng, settings.quick ? 5 : 50));
  out.push_back(check_forward_invariance(settings.quick ? 3 : 10));
  return out;
}

}  // namespace cbflearn
