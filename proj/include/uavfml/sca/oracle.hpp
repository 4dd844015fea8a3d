#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "uavfml/decision.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/sca/feasibility.hpp"

namespace uavfml {

/*
 * Exhaustive reference optimizer for single-UAV, single-target, single-round
 * instances with at most one free waypoint. Latency separates per component,
 * so each grid axis is tabulated once and the full product is scanned with
 * O(1) work per tuple. Used only to cross-check the block descent on tiny
 * instances; throws on anything larger.
 */
struct OracleOptions {
  int grid_points = 13;
};

struct OracleResult {
  double objective = std::numeric_limits<double>::infinity();
  DecisionVector argmin;
  bool feasible_found = false;
};

inline OracleResult brute_force_oracle(const ScenarioConfig& cfg,
                                       const OracleOptions& opts = {}) {
  if (cfg.num_rounds != 1 || cfg.num_uavs != 1 || cfg.num_targets != 1 || cfg.time_slots > 3 ||
      cfg.time_slots < 2) {
    throw ConfigError("reference search needs K=1, U=1, C=1, T in {2,3}");
  }
  if (opts.grid_points < 2) throw ConfigError("grid_points must be at least 2");
  const int n = opts.grid_points;

  auto linspace = [n](double lo, double hi) {
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) {
      v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
    }
    return v;
  };

  DecisionVector base(cfg.num_rounds, cfg.num_targets, cfg.num_uavs, cfg.time_slots);
  base.traj_x[0] = cfg.start_pos.x;
  base.traj_y[0] = cfg.start_pos.y;
  base.traj_x[static_cast<std::size_t>(base.T - 1)] = cfg.end_pos.x;
  base.traj_y[static_cast<std::size_t>(base.T - 1)] = cfg.end_pos.y;

  /* free middle waypoint interval on the start-end axis (collinear family) */
  const double step = cfg.v_max * cfg.slot_duration();
  std::vector<double> ws;
  if (base.T == 3) {
    const double lo = std::max(cfg.start_pos.x, cfg.end_pos.x) - step;
    const double hi = std::min(cfg.start_pos.x, cfg.end_pos.x) + step;
    if (lo > hi) throw InfeasibleError("step_limit", "no reachable middle waypoint");
    ws = linspace(lo, hi);
  } else {
    if (dist2(cfg.start_pos, cfg.end_pos) > step * step * (1.0 + 1e-12)) {
      throw InfeasibleError("step_limit", "endpoints too far apart for one slot");
    }
    ws = {0.0}; /* unused placeholder so the scan below has one entry */
  }

  const Vec3& target = cfg.target_positions[0];
  const double p_min = min_power_for_threshold(cfg, target);
  const double D = cfg.samples_per_uav[0];

  struct SenseEntry {
    double x, p, t, e;
  };
  std::vector<SenseEntry> sense;
  sense.push_back({0.0, 1e-6 * cfg.p_se_max, 0.0, 0.0});
  if (p_min <= cfg.p_se_max) {
    for (double p : linspace(p_min, cfg.p_se_max)) {
      const double rate = radar_rate(cfg, target, p);
      if (rate < cfg.radar_rate_threshold * (1.0 - 1e-12)) continue;
      const double t = D / rate;
      sense.push_back({1.0, p, t, p * t});
    }
  }

  const std::vector<double> pcs = linspace(1e-6 * cfg.p_cm_max, cfg.p_cm_max);
  const std::vector<double> fus = linspace(1e-6 * cfg.f_u_max, cfg.f_u_max);
  const std::vector<double> fbs = linspace(1e-6 * cfg.f_bs_max, cfg.f_bs_max);
  const std::vector<double> pbs = linspace(1e-6 * cfg.p_bs_max, cfg.p_bs_max);

  /* per-slot inverse rates for every (waypoint, upload power) pair */
  const double total_payload = cfg.embed_payload + cfg.model_payload;
  const double per_slot = total_payload / base.T;
  std::vector<double> up_t(ws.size() * pcs.size());
  for (std::size_t iw = 0; iw < ws.size(); ++iw) {
    for (std::size_t ip = 0; ip < pcs.size(); ++ip) {
      double t = 0.0;
      t += per_slot / uplink_rate(cfg, pcs[ip], cfg.start_pos.x, cfg.start_pos.y);
      if (base.T == 3) t += per_slot / uplink_rate(cfg, pcs[ip], ws[iw], 0.0);
      t += per_slot / uplink_rate(cfg, pcs[ip], cfg.end_pos.x, cfg.end_pos.y);
      up_t[iw * pcs.size() + ip] = t;
    }
  }

  const double train_cycles = cfg.local_iters * cfg.cycles_per_sample[0] * D;
  std::vector<double> tr_t(fus.size()), tr_e(fus.size());
  for (std::size_t i = 0; i < fus.size(); ++i) {
    tr_t[i] = train_cycles / fus[i];
    tr_e[i] = cfg.switched_capacitance * train_cycles * fus[i] * fus[i];
  }

  const double bs_cycles = cfg.server_iters * cfg.cycles_per_sample_bs * cfg.fl.probe_set_size;
  std::vector<double> bs_t(fbs.size());
  for (std::size_t i = 0; i < fbs.size(); ++i) bs_t[i] = bs_cycles / fbs[i];

  std::vector<double> dl_t(pbs.size());
  for (std::size_t i = 0; i < pbs.size(); ++i) {
    dl_t[i] = cfg.global_payload /
              downlink_rate(cfg, pbs[i], cfg.end_pos.x, cfg.end_pos.y);
  }

  OracleResult res;
  double best = std::numeric_limits<double>::infinity();
  struct Pick {
    std::size_t is, iw, ipc, ifu, ifb, ipb;
  } pick{};

  for (std::size_t is = 0; is < sense.size(); ++is) {
    for (std::size_t iw = 0; iw < ws.size(); ++iw) {
      for (std::size_t ipc = 0; ipc < pcs.size(); ++ipc) {
        const double t_up = up_t[iw * pcs.size() + ipc];
        const double e_up = pcs[ipc] * t_up;
        for (std::size_t ifu = 0; ifu < fus.size(); ++ifu) {
          const double e = sense[is].e + tr_e[ifu] + e_up;
          if (e > cfg.e_max * (1.0 + 1e-12)) continue;
          const double head = sense[is].t + tr_t[ifu] + t_up;
          for (std::size_t ifb = 0; ifb < fbs.size(); ++ifb) {
            for (std::size_t ipb = 0; ipb < pbs.size(); ++ipb) {
              const double lat = head + bs_t[ifb] + dl_t[ipb];
              if (lat < best) {
                best = lat;
                pick = {is, iw, ipc, ifu, ifb, ipb};
                res.feasible_found = true;
              }
            }
          }
        }
      }
    }
  }

  if (!res.feasible_found) throw InfeasibleError("uav_energy", "grid found no feasible point");

  DecisionVector d = base;
  d.x(0, 0, 0) = sense[pick.is].x;
  d.p_se[0] = sense[pick.is].p;
  if (d.T == 3) {
    d.traj_x[1] = ws[pick.iw];
    d.traj_y[1] = 0.0;
  }
  for (int t = 0; t < d.T; ++t) d.p_cm[d.kut(0, 0, t)] = pcs[pick.ipc];
  d.f_u[0] = fus[pick.ifu];
  d.f_bs[0] = fbs[pick.ifb];
  d.p_bs[0] = pbs[pick.ipb];

  res.argmin = d;
  res.objective = total_latency(cfg, d);
  return res;
}

}  // namespace uavfml
