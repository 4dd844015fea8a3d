#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uavfml/convex/barrier.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/initial.hpp"
#include "uavfml/sca/feasibility.hpp"
#include "uavfml/sca/subproblems.hpp"

namespace uavfml {

/*
 * T_OPT optimizes all three blocks. The ablations freeze one block at the
 * initial point: UAV_SS_PC skips trajectory/frequency descent, UAV_T_RA skips
 * the sensing block, BS_RA only tunes the UAV-side blocks' complement.
 */
enum class BaselineMode { T_OPT, UAV_SS_PC, UAV_T_RA, BS_RA };

inline const char* to_string(BaselineMode m) {
  switch (m) {
    case BaselineMode::T_OPT: return "t-opt";
    case BaselineMode::UAV_SS_PC: return "uav-ss-pc";
    case BaselineMode::UAV_T_RA: return "uav-t-ra";
    case BaselineMode::BS_RA: return "bs-ra";
  }
  return "t-opt";
}

inline BaselineMode parse_mode(const std::string& s) {
  if (s == "t-opt") return BaselineMode::T_OPT;
  if (s == "uav-ss-pc") return BaselineMode::UAV_SS_PC;
  if (s == "uav-t-ra") return BaselineMode::UAV_T_RA;
  if (s == "bs-ra") return BaselineMode::BS_RA;
  throw ConfigError("unknown mode '" + s + "' (t-opt, uav-ss-pc, uav-t-ra, bs-ra)");
}

inline bool runs_sensing_block(BaselineMode m) {
  return m == BaselineMode::T_OPT || m == BaselineMode::UAV_SS_PC;
}
inline bool runs_motion_block(BaselineMode m) {
  return m == BaselineMode::T_OPT || m == BaselineMode::UAV_T_RA;
}
inline bool runs_server_block(BaselineMode m) {
  return m == BaselineMode::T_OPT || m == BaselineMode::BS_RA;
}

struct BcdOptions {
  int max_outer = 12;
  double rel_tol = 1e-4; /* relative objective change that counts as converged */
  SolverOptions solver;
};

struct BcdTraceEntry {
  int iteration;
  double objective_s;
  double violation;
};

struct BcdResult {
  DecisionVector decision;
  std::vector<BcdTraceEntry> trace;
  bool converged = false;
  int outer_iters = 0;
  double objective = 0.0;
};

/* Threshold-round the relaxed schedule; per target keep the strongest UAV. */
inline void round_scheduling(DecisionVector& d) {
  for (int k = 0; k < d.K; ++k) {
    for (int c = 0; c < d.C; ++c) {
      int best = -1;
      double best_x = 0.0;
      for (int u = 0; u < d.U; ++u) {
        const double x = d.x(k, c, u);
        if (x >= 0.5 && x > best_x) {
          best_x = x;
          best = u;
        }
      }
      for (int u = 0; u < d.U; ++u) d.x(k, c, u) = (u == best) ? 1.0 : 0.0;
    }
  }
}

/*
 * After rounding, restore exact feasibility: lift sensing power to the
 * detection threshold, drop assignments the power cap cannot serve, then shed
 * assignments (weakest relaxed score first) until the energy budget holds.
 */
inline void repair_schedule(const ScenarioConfig& cfg, DecisionVector& d,
                            const DecisionVector& relaxed) {
  for (int u = 0; u < d.U; ++u) {
    for (int k = 0; k < d.K; ++k) {
      double floor_p = 0.0;
      for (int c = 0; c < d.C; ++c) {
        if (d.x(k, c, u) <= 0.5) continue;
        const double need =
            min_power_for_threshold(cfg, cfg.target_positions[static_cast<std::size_t>(c)]);
        if (need > cfg.p_se_max) {
          d.x(k, c, u) = 0.0; /* unreachable detection threshold */
          continue;
        }
        floor_p = std::max(floor_p, need);
      }
      double& p = d.p_se[d.ku(k, u)];
      p = std::min(cfg.p_se_max, std::max(p, floor_p));
    }

    while (uav_total_energy(cfg, d, u) > cfg.e_max) {
      int kd = -1, cd = -1;
      double weakest = 2.0;
      for (int k = 0; k < d.K; ++k) {
        for (int c = 0; c < d.C; ++c) {
          if (d.x(k, c, u) <= 0.5) continue;
          const double score = relaxed.x(k, c, u);
          if (score < weakest) {
            weakest = score;
            kd = k;
            cd = c;
          }
        }
      }
      if (kd < 0) break; /* nothing left to shed; energy is set by other blocks */
      d.x(kd, cd, u) = 0.0;
    }
  }
}

inline BcdResult bcd_optimize(const ScenarioConfig& cfg, BaselineMode mode,
                              const BcdOptions& opts = {}) {
  BcdResult res;
  res.decision = initial_feasible_point(cfg);
  DecisionVector& d = res.decision;
  SurrogateState st = init_surrogate_state(cfg, d);

  double obj = total_latency(cfg, d);
  res.trace.push_back({0, obj, check_feasibility(cfg, d).max_violation});

  const double accept_slack = 1e-12;

  auto try_block = [&](int which) {
    BuiltSubproblem sp;
    switch (which) {
      case 1: sp = build_subproblem1(cfg, d, st); break;
      case 2: sp = build_subproblem2(cfg, d, st); break;
      default: sp = build_subproblem3(cfg, d, st); break;
    }
    SolveResult sr = solve_convex(sp.prog, sp.start, opts.solver);
    if (sr.report.status == SolveStatus::Infeasible) return;

    DecisionVector cand = d;
    sp.apply(sr.x, cand);
    if (which == 1) {
      DecisionVector relaxed = cand;
      round_scheduling(cand);
      repair_schedule(cfg, cand, relaxed);
    }
    const double cand_obj = total_latency(cfg, cand);
    if (cand_obj <= obj + accept_slack && check_feasibility(cfg, cand).ok()) {
      d = cand;
      obj = cand_obj;
      st = init_surrogate_state(cfg, d);
    }
  };

  for (int it = 1; it <= opts.max_outer; ++it) {
    const double prev = obj;
    if (runs_sensing_block(mode)) try_block(1);
    if (runs_motion_block(mode)) try_block(2);
    if (runs_server_block(mode)) try_block(3);

    res.trace.push_back({it, obj, check_feasibility(cfg, d).max_violation});
    res.outer_iters = it;
    if (prev - obj <= opts.rel_tol * std::max(1.0, std::abs(prev))) {
      res.converged = true;
      break;
    }
  }

  res.objective = obj;
  const ViolationReport vr = check_feasibility(cfg, d);
  if (!vr.ok()) throw SolverError("block descent left an infeasible point: " + vr.summary());
  return res;
}

}  // namespace uavfml
