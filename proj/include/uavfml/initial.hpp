#pragma once

#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "uavfml/decision.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/latency.hpp"

namespace uavfml {

/*
 * Deterministic feasible construction: straight-line flight, nearest-UAV
 * schedule, everything at half its bound. Sensing power is raised to the
 * threshold floor where needed; if the energy budget still overflows, uplink
 * power, compute frequency and any sensing headroom above the floor are
 * scaled down together (each energy term is monotone in its variable, so
 * bisection on the common scale factor is exact).
 */
inline DecisionVector initial_feasible_point(const ScenarioConfig& cfg) {
  const auto report = validate(cfg);
  if (!report.ok()) throw ConfigError("invalid scenario:\n" + report.summary());
  const int K = cfg.num_rounds, C = cfg.num_targets, U = cfg.num_uavs, T = cfg.time_slots;
  if (K < 1) throw ConfigError("num_rounds must be >= 1 for optimization");

  DecisionVector d(K, C, U, T);

  const double step =
      std::sqrt(dist2(cfg.start_pos, cfg.end_pos)) / std::max(1, cfg.time_slots - 1);
  if (step > cfg.v_max * cfg.slot_duration() * (1.0 + 1e-12)) {
    throw InfeasibleError("step_limit",
                          "straight-line trajectory violates the per-slot displacement bound");
  }

  for (int k = 0; k < K; ++k) {
    nearest_uav_schedule(cfg, d, k);
    for (int u = 0; u < U; ++u) straight_line_trajectory(cfg, d, k, u);
    d.p_bs[static_cast<std::size_t>(k)] = 0.5 * cfg.p_bs_max;
    d.f_bs[static_cast<std::size_t>(k)] = 0.5 * cfg.f_bs_max;
  }

  /* Per-UAV sensing power floor from the radar rate threshold. */
  std::vector<double> p_floor(static_cast<std::size_t>(U), 0.0);
  for (int u = 0; u < U; ++u) {
    for (int c = 0; c < C; ++c) {
      if (d.x(0, c, u) > 0.5) {
        const double need =
            min_power_for_threshold(cfg, cfg.target_positions[static_cast<std::size_t>(c)]);
        p_floor[static_cast<std::size_t>(u)] =
            std::max(p_floor[static_cast<std::size_t>(u)], need);
      }
    }
    if (p_floor[static_cast<std::size_t>(u)] > cfg.p_se_max) {
      throw InfeasibleError("radar_threshold",
                            "radar rate threshold unattainable within p_se_max for uav " +
                                std::to_string(u));
    }
  }

  auto apply_scale = [&](int u, double s) {
    for (int k = 0; k < K; ++k) {
      d.p_se[d.ku(k, u)] =
          std::max(p_floor[static_cast<std::size_t>(u)], s * 0.5 * cfg.p_se_max);
      d.f_u[d.ku(k, u)] = std::max(1e-6 * cfg.f_u_max, s * 0.5 * cfg.f_u_max);
      for (int t = 0; t < T; ++t) {
        d.p_cm[d.kut(k, u, t)] = std::max(1e-9 * cfg.p_cm_max, s * 0.5 * cfg.p_cm_max);
      }
    }
  };
  auto total_energy = [&](int u) { return uav_total_energy(cfg, d, u); };

  for (int u = 0; u < U; ++u) {
    apply_scale(u, 1.0);
    if (total_energy(u) <= cfg.e_max) continue;
    double lo = 1e-9, hi = 1.0;
    apply_scale(u, lo);
    if (total_energy(u) > cfg.e_max) {
      throw InfeasibleError("uav_energy",
                            "energy budget unattainable for uav " + std::to_string(u));
    }
    for (int it = 0; it < 80; ++it) {
      const double mid = 0.5 * (lo + hi);
      apply_scale(u, mid);
      if (total_energy(u) <= cfg.e_max) {
        lo = mid;
      } else {
        hi = mid;
      }
    }
    apply_scale(u, lo);
  }
  return d;
}

}  // namespace uavfml
