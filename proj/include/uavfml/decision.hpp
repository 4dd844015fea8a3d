#pragma once

#include <cstddef>
#include <vector>

#include "uavfml/channel.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/scenario.hpp"

namespace uavfml {

/*
 * One complete operating point of the system: sensing schedule and powers,
 * per-slot trajectories and uplink powers, compute frequencies and the BS
 * downlink settings, for every round. Flat row-major storage.
 */
struct DecisionVector {
  int K = 0, C = 0, U = 0, T = 0;

  std::vector<double> sched;   /* K*C*U, schedule x in {0,1} (relaxed in [0,1]) */
  std::vector<double> p_se;    /* K*U */
  std::vector<double> p_cm;    /* K*U*T */
  std::vector<double> traj_x;  /* K*U*T */
  std::vector<double> traj_y;  /* K*U*T */
  std::vector<double> f_u;     /* K*U */
  std::vector<double> p_bs;    /* K */
  std::vector<double> f_bs;    /* K */

  DecisionVector() = default;
  DecisionVector(int k, int c, int u, int t)
      : K(k),
        C(c),
        U(u),
        T(t),
        sched(static_cast<std::size_t>(k) * c * u, 0.0),
        p_se(static_cast<std::size_t>(k) * u, 0.0),
        p_cm(static_cast<std::size_t>(k) * u * t, 0.0),
        traj_x(static_cast<std::size_t>(k) * u * t, 0.0),
        traj_y(static_cast<std::size_t>(k) * u * t, 0.0),
        f_u(static_cast<std::size_t>(k) * u, 0.0),
        p_bs(static_cast<std::size_t>(k), 0.0),
        f_bs(static_cast<std::size_t>(k), 0.0) {}

  std::size_t kcu(int k, int c, int u) const {
    return (static_cast<std::size_t>(k) * C + c) * U + u;
  }
  std::size_t ku(int k, int u) const { return static_cast<std::size_t>(k) * U + u; }
  std::size_t kut(int k, int u, int t) const {
    return (static_cast<std::size_t>(k) * U + u) * T + t;
  }

  double& x(int k, int c, int u) { return sched[kcu(k, c, u)]; }
  double x(int k, int c, int u) const { return sched[kcu(k, c, u)]; }
};

/* T waypoints from start to end, equal steps. Keeps the per-slot displacement
   bound satisfied whenever the geometry admits it at all. */
inline void straight_line_trajectory(const ScenarioConfig& cfg, DecisionVector& d, int k, int u) {
  const int T = cfg.time_slots;
  for (int t = 0; t < T; ++t) {
    const double frac = T > 1 ? static_cast<double>(t) / (T - 1) : 0.0;
    d.traj_x[d.kut(k, u, t)] = cfg.start_pos.x + frac * (cfg.end_pos.x - cfg.start_pos.x);
    d.traj_y[d.kut(k, u, t)] = cfg.start_pos.y + frac * (cfg.end_pos.y - cfg.start_pos.y);
  }
}

/* Nearest-UAV target assignment, ties to the lowest UAV index. All UAVs hover
   at the shared start position, so every distance ties and the strict < keeps
   UAV 0. */
inline void nearest_uav_schedule(const ScenarioConfig& cfg, DecisionVector& d, int k) {
  for (int c = 0; c < cfg.num_targets; ++c) {
    int best_u = 0;
    double best = std::numeric_limits<double>::infinity();
    for (int u = 0; u < cfg.num_uavs; ++u) {
      const double dd = sensing_dist2(cfg, cfg.target_positions[static_cast<std::size_t>(c)]);
      if (dd < best) {
        best = dd;
        best_u = u;
      }
    }
    d.x(k, c, best_u) = 1.0;
  }
}

}  // namespace uavfml
