#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uavfml/channel.hpp"
#include "uavfml/decision.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/scenario.hpp"

namespace uavfml {

/*
 * Exact audit of every original constraint at a decision point. Violations
 * are scaled by the natural magnitude of their constraint so one tolerance
 * applies across units.
 */

struct Violation {
  std::string name;
  double magnitude = 0.0; /* scaled; positive means violated */
};

struct ViolationReport {
  std::vector<Violation> violations;
  double max_violation = 0.0;

  bool ok(double tol = 1e-6) const { return max_violation <= tol; }
  std::string summary() const {
    std::string s;
    for (const auto& v : violations) {
      s += v.name;
      s += " violated by ";
      s += format_or_nan(v.magnitude);
      s += '\n';
    }
    return s;
  }
};

inline ViolationReport check_feasibility(const ScenarioConfig& cfg, const DecisionVector& d,
                                         double report_tol = 1e-9) {
  ViolationReport report;
  auto note = [&](const std::string& name, double scaled) {
    report.max_violation = std::max(report.max_violation, scaled);
    if (scaled > report_tol) report.violations.push_back({name, scaled});
  };
  auto box = [&](const std::string& name, double v, double hi) {
    note(name + "_low", -v / hi);
    note(name + "_high", (v - hi) / hi);
  };

  const double vstep = cfg.v_max * cfg.slot_duration();
  const double reach_scale = std::max(1.0, std::sqrt(dist2(cfg.start_pos, cfg.end_pos)));

  for (int k = 0; k < d.K; ++k) {
    box("p_bs", d.p_bs[static_cast<std::size_t>(k)], cfg.p_bs_max);
    box("f_bs", d.f_bs[static_cast<std::size_t>(k)], cfg.f_bs_max);

    for (int c = 0; c < d.C; ++c) {
      double sum = 0.0;
      for (int u = 0; u < d.U; ++u) {
        const double x = d.x(k, c, u);
        sum += x;
        note("schedule_binary", std::abs(x - std::round(x)));
      }
      note("target_once", sum - 1.0);
    }

    for (int u = 0; u < d.U; ++u) {
      box("p_se", d.p_se[d.ku(k, u)], cfg.p_se_max);
      box("f_u", d.f_u[d.ku(k, u)], cfg.f_u_max);
      for (int t = 0; t < d.T; ++t) {
        box("p_cm", d.p_cm[d.kut(k, u, t)], cfg.p_cm_max);
      }

      for (int c = 0; c < d.C; ++c) {
        const double x = d.x(k, c, u);
        if (x > 0.5) {
          const double rate = radar_rate(
              cfg, cfg.target_positions[static_cast<std::size_t>(c)], d.p_se[d.ku(k, u)]);
          note("radar_threshold",
               (x * cfg.radar_rate_threshold - rate) / cfg.radar_rate_threshold);
        }
      }

      /* Endpoints are part of the trajectory model. */
      note("traj_start", std::abs(d.traj_x[d.kut(k, u, 0)] - cfg.start_pos.x) / reach_scale);
      note("traj_start", std::abs(d.traj_y[d.kut(k, u, 0)] - cfg.start_pos.y) / reach_scale);
      note("traj_end", std::abs(d.traj_x[d.kut(k, u, d.T - 1)] - cfg.end_pos.x) / reach_scale);
      note("traj_end", std::abs(d.traj_y[d.kut(k, u, d.T - 1)] - cfg.end_pos.y) / reach_scale);
      for (int t = 0; t + 1 < d.T; ++t) {
        const double dx = d.traj_x[d.kut(k, u, t + 1)] - d.traj_x[d.kut(k, u, t)];
        const double dy = d.traj_y[d.kut(k, u, t + 1)] - d.traj_y[d.kut(k, u, t)];
        note("step_limit", (dx * dx + dy * dy - vstep * vstep) / (vstep * vstep));
      }
    }
  }

  const double e_scale = std::max(cfg.e_max, 1e-12);
  for (int u = 0; u < d.U; ++u) {
    note("uav_energy", (uav_total_energy(cfg, d, u) - cfg.e_max) / e_scale);
  }
  return report;
}

}  // namespace uavfml
