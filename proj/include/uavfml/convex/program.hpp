#pragma once

#include <cmath>
#include <string>
#include <vector>

#include "uavfml/csv.hpp"
#include "uavfml/errors.hpp"

namespace uavfml {

/*
 * Structured convex program IR. Constraints are atom sums with value <= 0;
 * variables carry finite box bounds; the objective is a single epigraph
 * variable. Builders may only emit the convex atom shapes below, which a
 * structural check enforces before any solve.
 */

enum class AtomKind { Constant, Affine, Quadratic, SquareDiff, Reciprocal };

struct Atom {
  AtomKind kind = AtomKind::Constant;
  double coef = 0.0;
  int var_a = -1;
  int var_b = -1;      /* SquareDiff only; -1 means the constant operand is used */
  double const_b = 0.0;

  static Atom constant(double c) { return {AtomKind::Constant, c, -1, -1, 0.0}; }
  static Atom affine(double c, int v) { return {AtomKind::Affine, c, v, -1, 0.0}; }
  static Atom quadratic(double c, int v) { return {AtomKind::Quadratic, c, v, -1, 0.0}; }
  static Atom square_diff(double c, int a, int b) { return {AtomKind::SquareDiff, c, a, b, 0.0}; }
  static Atom square_diff_const(double c, int a, double b) {
    return {AtomKind::SquareDiff, c, a, -1, b};
  }
  static Atom reciprocal(double c, int v) { return {AtomKind::Reciprocal, c, v, -1, 0.0}; }
};

struct Variable {
  std::string name;
  double lb = 0.0;
  double ub = 0.0;
};

struct Constraint {
  std::string name;
  std::vector<Atom> atoms;
};

struct ConvexProgram {
  std::vector<Variable> vars;
  std::vector<Constraint> cons;
  int objective = -1;

  int add_var(std::string name, double lb, double ub) {
    vars.push_back({std::move(name), lb, ub});
    return static_cast<int>(vars.size()) - 1;
  }

  Constraint& add_con(std::string name) {
    cons.push_back({std::move(name), {}});
    return cons.back();
  }

  void add_con(Constraint c) { cons.push_back(std::move(c)); }

  /* Enforces the IR invariants; throws SolverError naming the offender. */
  void structural_check() const {
    const int n = static_cast<int>(vars.size());
    if (objective < 0 || objective >= n) throw SolverError("objective variable missing");
    for (const auto& v : vars) {
      if (!(std::isfinite(v.lb) && std::isfinite(v.ub)) || !(v.lb < v.ub)) {
        throw SolverError("variable " + v.name + " needs finite lb < ub");
      }
    }
    for (const auto& c : cons) {
      for (const auto& a : c.atoms) {
        auto check_var = [&](int idx) {
          if (idx < 0 || idx >= n) throw SolverError("bad var index in " + c.name);
        };
        switch (a.kind) {
          case AtomKind::Constant:
            break;
          case AtomKind::Affine:
            check_var(a.var_a);
            break;
          case AtomKind::Quadratic:
            check_var(a.var_a);
            if (a.coef < 0.0) throw SolverError("negative quadratic coef in " + c.name);
            break;
          case AtomKind::SquareDiff:
            check_var(a.var_a);
            if (a.var_b >= 0) check_var(a.var_b);
            if (a.coef < 0.0) throw SolverError("negative square coef in " + c.name);
            break;
          case AtomKind::Reciprocal:
            check_var(a.var_a);
            if (a.coef < 0.0) throw SolverError("negative reciprocal coef in " + c.name);
            if (!(vars[static_cast<std::size_t>(a.var_a)].lb > 0.0)) {
              throw SolverError("reciprocal over variable without positive lower bound in " +
                                c.name);
            }
            break;
        }
      }
    }
  }

  double constraint_value(const Constraint& c, const std::vector<double>& x) const {
    double v = 0.0;
    for (const auto& a : c.atoms) {
      switch (a.kind) {
        case AtomKind::Constant:
          v += a.coef;
          break;
        case AtomKind::Affine:
          v += a.coef * x[static_cast<std::size_t>(a.var_a)];
          break;
        case AtomKind::Quadratic: {
          const double t = x[static_cast<std::size_t>(a.var_a)];
          v += a.coef * t * t;
          break;
        }
        case AtomKind::SquareDiff: {
          const double other =
              a.var_b >= 0 ? x[static_cast<std::size_t>(a.var_b)] : a.const_b;
          const double dlt = x[static_cast<std::size_t>(a.var_a)] - other;
          v += a.coef * dlt * dlt;
          break;
        }
        case AtomKind::Reciprocal:
          v += a.coef / x[static_cast<std::size_t>(a.var_a)];
          break;
      }
    }
    return v;
  }

  /* Largest constraint violation (0 when feasible); boxes clamp separately. */
  double max_violation(const std::vector<double>& x) const {
    double worst = 0.0;
    for (const auto& c : cons) worst = std::max(worst, constraint_value(c, x));
    for (std::size_t i = 0; i < vars.size(); ++i) {
      worst = std::max(worst, vars[i].lb - x[i]);
      worst = std::max(worst, x[i] - vars[i].ub);
    }
    return worst;
  }

  /* One line per variable and constraint; stable across runs for diffing. */
  std::string dump() const {
    std::string out;
    out += "objective: " + vars[static_cast<std::size_t>(objective)].name + "\n";
    for (const auto& v : vars) {
      out += "var " + v.name + " in [" + format_double(v.lb) + ", " + format_double(v.ub) +
             "]\n";
    }
    for (const auto& c : cons) {
      out += c.name + ":";
      for (const auto& a : c.atoms) {
        out += ' ';
        switch (a.kind) {
          case AtomKind::Constant:
            out += format_double(a.coef);
            break;
          case AtomKind::Affine:
            out += format_double(a.coef) + "*" + vars[static_cast<std::size_t>(a.var_a)].name;
            break;
          case AtomKind::Quadratic:
            out += format_double(a.coef) + "*" + vars[static_cast<std::size_t>(a.var_a)].name +
                   "^2";
            break;
          case AtomKind::SquareDiff:
            out += format_double(a.coef) + "*(" +
                   vars[static_cast<std::size_t>(a.var_a)].name + "-" +
                   (a.var_b >= 0 ? vars[static_cast<std::size_t>(a.var_b)].name
                                 : format_double(a.const_b)) +
                   ")^2";
            break;
          case AtomKind::Reciprocal:
            out += format_double(a.coef) + "/" + vars[static_cast<std::size_t>(a.var_a)].name;
            break;
        }
        out += " +";
      }
      out += " <= 0\n";
    }
    return out;
  }
};

}  // namespace uavfml
