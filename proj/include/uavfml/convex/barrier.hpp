#pragma once

#include <Eigen/Sparse>
#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "uavfml/convex/program.hpp"
#include "uavfml/errors.hpp"

namespace uavfml {

/*
 * Log-barrier interior-point solver over the program IR. Path following with
 * a damped sparse Newton inner loop; every iterate is strictly feasible, so
 * returned points satisfy the constraints exactly and the duality-gap bound
 * m/t certifies the advertised relative optimality.
 */

enum class SolveStatus { Optimal, Infeasible, MaxIter };

struct SolverOptions {
  double eps_opt = 1e-6;     /* relative optimality target */
  double eps_abs = 1e-9;     /* absolute gap floor for near-zero objectives */
  double t0 = 1.0;
  double t_growth = 15.0;
  int max_stages = 64;
  int max_inner = 60;
  double inner_tol = 1e-9;   /* Newton decrement / 2 */
  double strict_margin = 1e-10;
  bool allow_phase1 = true;
};

struct SolveReport {
  SolveStatus status = SolveStatus::MaxIter;
  double objective = std::numeric_limits<double>::quiet_NaN();
  double gap_estimate = std::numeric_limits<double>::infinity();
  double max_violation = std::numeric_limits<double>::infinity();
  int newton_iters = 0;
  std::string message;
};

struct SolveResult {
  std::vector<double> x;
  SolveReport report;
};

namespace detail_barrier {

struct Workspace {
  const ConvexProgram* prog = nullptr;
  int n = 0;
  std::vector<std::vector<int>> con_vars;  /* sorted unique vars per constraint */
  Eigen::SparseMatrix<double> H;
  bool pattern_ready = false;
  Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt;

  explicit Workspace(const ConvexProgram& p) : prog(&p), n(static_cast<int>(p.vars.size())) {
    con_vars.resize(p.cons.size());
    for (std::size_t j = 0; j < p.cons.size(); ++j) {
      auto& vs = con_vars[j];
      for (const auto& a : p.cons[j].atoms) {
        if (a.var_a >= 0) vs.push_back(a.var_a);
        if (a.kind == AtomKind::SquareDiff && a.var_b >= 0) vs.push_back(a.var_b);
      }
      std::sort(vs.begin(), vs.end());
      vs.erase(std::unique(vs.begin(), vs.end()), vs.end());
    }
  }
};

inline bool strictly_feasible(const ConvexProgram& p, const std::vector<double>& x,
                              double margin) {
  for (std::size_t i = 0; i < p.vars.size(); ++i) {
    if (!(x[i] > p.vars[i].lb && x[i] < p.vars[i].ub)) return false;
  }
  for (const auto& c : p.cons) {
    if (!(p.constraint_value(c, x) < -margin)) return false;
  }
  return true;
}

inline double barrier_value(const ConvexProgram& p, const std::vector<double>& x, double t,
                            bool& ok) {
  ok = true;
  double phi = t * x[static_cast<std::size_t>(p.objective)];
  for (const auto& c : p.cons) {
    const double v = p.constraint_value(c, x);
    if (!(v < 0.0)) {
      ok = false;
      return std::numeric_limits<double>::infinity();
    }
    phi -= std::log(-v);
  }
  for (std::size_t i = 0; i < p.vars.size(); ++i) {
    const double lo = x[i] - p.vars[i].lb;
    const double hi = p.vars[i].ub - x[i];
    if (!(lo > 0.0 && hi > 0.0)) {
      ok = false;
      return std::numeric_limits<double>::infinity();
    }
    phi -= std::log(lo) + std::log(hi);
  }
  return phi;
}

/* One damped Newton descent on the stage-t barrier. Returns iterations used. */
inline int newton_stage(Workspace& ws, std::vector<double>& x, double t,
                        const SolverOptions& opts) {
  const ConvexProgram& p = *ws.prog;
  const int n = ws.n;
  Eigen::VectorXd grad(n);
  std::vector<double> cgrad(static_cast<std::size_t>(n), 0.0);
  std::vector<Eigen::Triplet<double>> trips;
  int used = 0;

  for (int iter = 0; iter < opts.max_inner; ++iter, ++used) {
    grad.setZero();
    grad[p.objective] += t;
    trips.clear();

    for (std::size_t j = 0; j < p.cons.size(); ++j) {
      const auto& c = p.cons[j];
      const double v = p.constraint_value(c, x);
      const double inv = 1.0 / (-v); /* > 0 on the interior */

      for (const int vi : ws.con_vars[j]) cgrad[static_cast<std::size_t>(vi)] = 0.0;
      for (const auto& a : c.atoms) {
        switch (a.kind) {
          case AtomKind::Constant:
            break;
          case AtomKind::Affine:
            cgrad[static_cast<std::size_t>(a.var_a)] += a.coef;
            break;
          case AtomKind::Quadratic: {
            const double xa = x[static_cast<std::size_t>(a.var_a)];
            cgrad[static_cast<std::size_t>(a.var_a)] += 2.0 * a.coef * xa;
            trips.emplace_back(a.var_a, a.var_a, 2.0 * a.coef * inv);
            break;
          }
          case AtomKind::SquareDiff: {
            const double other =
                a.var_b >= 0 ? x[static_cast<std::size_t>(a.var_b)] : a.const_b;
            const double dlt = x[static_cast<std::size_t>(a.var_a)] - other;
            cgrad[static_cast<std::size_t>(a.var_a)] += 2.0 * a.coef * dlt;
            trips.emplace_back(a.var_a, a.var_a, 2.0 * a.coef * inv);
            if (a.var_b >= 0) {
              cgrad[static_cast<std::size_t>(a.var_b)] -= 2.0 * a.coef * dlt;
              trips.emplace_back(a.var_b, a.var_b, 2.0 * a.coef * inv);
              trips.emplace_back(a.var_a, a.var_b, -2.0 * a.coef * inv);
              trips.emplace_back(a.var_b, a.var_a, -2.0 * a.coef * inv);
            }
            break;
          }
          case AtomKind::Reciprocal: {
            const double xa = x[static_cast<std::size_t>(a.var_a)];
            cgrad[static_cast<std::size_t>(a.var_a)] -= a.coef / (xa * xa);
            trips.emplace_back(a.var_a, a.var_a, 2.0 * a.coef / (xa * xa * xa) * inv);
            break;
          }
        }
      }

      /* -log(-c): gradient inv * dc, Hessian inv^2 dc dc^T + inv * d2c.
       * Zero entries are still emitted: the factorization pattern is analyzed
       * once, so the triplet positions must not depend on the iterate. */
      for (const int vi : ws.con_vars[j]) {
        const double gi = cgrad[static_cast<std::size_t>(vi)];
        grad[vi] += inv * gi;
        for (const int vk : ws.con_vars[j]) {
          const double gk = cgrad[static_cast<std::size_t>(vk)];
          trips.emplace_back(vi, vk, inv * inv * gi * gk);
        }
      }
    }

    for (int i = 0; i < n; ++i) {
      const double lo = x[static_cast<std::size_t>(i)] - p.vars[static_cast<std::size_t>(i)].lb;
      const double hi = p.vars[static_cast<std::size_t>(i)].ub - x[static_cast<std::size_t>(i)];
      grad[i] += -1.0 / lo + 1.0 / hi;
      trips.emplace_back(i, i, 1.0 / (lo * lo) + 1.0 / (hi * hi));
    }

    if (!ws.pattern_ready) {
      ws.H.resize(n, n);
      ws.H.setFromTriplets(trips.begin(), trips.end());
      ws.ldlt.analyzePattern(ws.H);
      ws.pattern_ready = true;
    } else {
      ws.H.setFromTriplets(trips.begin(), trips.end());
    }

    Eigen::VectorXd dir;
    double ridge = 0.0;
    for (int attempt = 0; attempt < 6; ++attempt) {
      Eigen::SparseMatrix<double> Hr = ws.H;
      if (ridge > 0.0) {
        for (int i = 0; i < n; ++i) Hr.coeffRef(i, i) += ridge;
      }
      ws.ldlt.factorize(Hr);
      if (ws.ldlt.info() == Eigen::Success) {
        dir = ws.ldlt.solve(-grad);
        if (dir.allFinite()) break;
      }
      ridge = ridge == 0.0 ? 1e-10 : ridge * 100.0;
      dir.resize(0);
    }
    if (dir.size() == 0) throw SolverError("newton system factorization failed");

    const double dec = -grad.dot(dir);
    if (!(dec > 2.0 * opts.inner_tol)) return used + 1;

    /* Largest box-safe step, then backtracking with an Armijo test. */
    double alpha = 1.0;
    for (int i = 0; i < n; ++i) {
      const double di = dir[i];
      if (di > 0.0) {
        alpha = std::min(alpha,
                         (p.vars[static_cast<std::size_t>(i)].ub -
                          x[static_cast<std::size_t>(i)]) /
                             di);
      } else if (di < 0.0) {
        alpha = std::min(alpha,
                         (p.vars[static_cast<std::size_t>(i)].lb -
                          x[static_cast<std::size_t>(i)]) /
                             di);
      }
    }
    alpha = std::min(1.0, 0.99 * alpha);

    bool ok = false;
    const double phi0 = barrier_value(p, x, t, ok);
    std::vector<double> trial(x.size());
    bool stepped = false;
    for (int bt = 0; bt < 80; ++bt) {
      for (int i = 0; i < n; ++i) {
        trial[static_cast<std::size_t>(i)] = x[static_cast<std::size_t>(i)] + alpha * dir[i];
      }
      bool tok = false;
      const double phi1 = barrier_value(p, trial, t, tok);
      if (tok && phi1 <= phi0 - 0.25 * alpha * dec) {
        x.swap(trial);
        stepped = true;
        break;
      }
      alpha *= 0.5;
    }
    if (!stepped) return used + 1; /* stalled; stage is as centered as it gets */
  }
  return used;
}

}  // namespace detail_barrier

inline SolveResult solve_convex(const ConvexProgram& prog, const std::vector<double>& start,
                                const SolverOptions& opts = {});

namespace detail_barrier {

/* Minimize a shared slack over all constraints to manufacture a strictly
   feasible start. */
inline bool phase1_start(const ConvexProgram& prog, std::vector<double>& x,
                         const SolverOptions& opts) {
  ConvexProgram aug = prog;
  double worst = 0.0;
  for (const auto& c : prog.cons) worst = std::max(worst, prog.constraint_value(c, x));
  const double s0 = worst + 1.0;
  const int s_var = aug.add_var("phase1_slack", -2.0 * s0 - 1.0, 2.0 * s0 + 1.0);
  for (auto& c : aug.cons) c.atoms.push_back(Atom::affine(-1.0, s_var));
  aug.objective = s_var;

  SolverOptions p1 = opts;
  p1.allow_phase1 = false;
  p1.eps_opt = 1e-4;
  p1.eps_abs = 1e-8;

  std::vector<double> xs = x;
  xs.push_back(s0);
  const auto res = solve_convex(aug, xs, p1);
  if (res.report.status == SolveStatus::Infeasible) return false;
  if (!(res.x.back() < -opts.strict_margin)) return false;
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = res.x[i];
  return true;
}

}  // namespace detail_barrier

inline SolveResult solve_convex(const ConvexProgram& prog, const std::vector<double>& start,
                                const SolverOptions& opts) {
  prog.structural_check();
  if (start.size() != prog.vars.size()) throw SolverError("start size mismatch");

  SolveResult result;
  result.x = start;
  auto& x = result.x;

  /* Pull points at or outside a bound just inside it; interior starts stay put. */
  for (std::size_t i = 0; i < prog.vars.size(); ++i) {
    const auto& v = prog.vars[i];
    const double margin = std::min(1e-7 * (v.ub - v.lb), 0.45 * (v.ub - v.lb));
    if (!(x[i] > v.lb)) x[i] = v.lb + margin;
    if (!(x[i] < v.ub)) x[i] = v.ub - margin;
  }

  if (!detail_barrier::strictly_feasible(prog, x, opts.strict_margin)) {
    if (!opts.allow_phase1 || !detail_barrier::phase1_start(prog, x, opts)) {
      result.report.status = SolveStatus::Infeasible;
      result.report.message = "no strictly feasible point found";
      result.report.max_violation = prog.max_violation(x);
      return result;
    }
  }

  detail_barrier::Workspace ws(prog);
  const double m = static_cast<double>(prog.cons.size() + 2 * prog.vars.size());
  double t = opts.t0;
  int total_newton = 0;
  SolveStatus status = SolveStatus::MaxIter;

  for (int stage = 0; stage < opts.max_stages; ++stage) {
    total_newton += detail_barrier::newton_stage(ws, x, t, opts);
    const double obj = x[static_cast<std::size_t>(prog.objective)];
    const double gap = m / t;
    if (gap <= std::max(opts.eps_abs, opts.eps_opt * std::abs(obj))) {
      status = SolveStatus::Optimal;
      break;
    }
    t *= opts.t_growth;
  }

  result.report.status = status;
  result.report.objective = x[static_cast<std::size_t>(prog.objective)];
  result.report.gap_estimate = m / t;
  result.report.max_violation = std::max(0.0, prog.max_violation(x));
  result.report.newton_iters = total_newton;
  if (status == SolveStatus::MaxIter) result.report.message = "stage limit reached";
  return result;
}

}  // namespace uavfml
