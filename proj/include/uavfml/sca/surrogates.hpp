#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "uavfml/channel.hpp"
#include "uavfml/decision.hpp"
#include "uavfml/latency.hpp"

namespace uavfml {

/*
 * The three convexification primitives. Each is a global bound that touches
 * the exact expression at the expansion point, which is what makes the
 * block-descent rounds monotone.
 */

/* Lower bound of ln(1 + z) around z_i > 0, concave in 1/z hence convex-usable:
   ln(1+z_i) + z_i/(z_i+1) - (z_i^2/(z_i+1)) / z. */
inline double log_surrogate_lhs(double z, double z_i) {
  return std::log1p(z_i) + z_i / (z_i + 1.0) - (z_i * z_i / (z_i + 1.0)) / z;
}

/* Upper bound of a*b around (a_i, b_i) > 0 (weighted AM-GM):
   (b_i/a_i) a^2 / 2 + (a_i/b_i) b^2 / 2. */
inline double bilinear_upper(double a, double b, double a_i, double b_i) {
  return 0.5 * (b_i / a_i) * a * a + 0.5 * (a_i / b_i) * b * b;
}

/* Tangent lower bound of s^2 around s_i: s_i^2 + 2 s_i (s - s_i). */
inline double square_lower(double s, double s_i) { return s_i * s_i + 2.0 * s_i * (s - s_i); }

/*
 * Linearization points for every surrogate in the three blocks, refreshed
 * from each block's solved slack values. Values are stored in SI units and
 * floored away from zero so they stay usable as denominators.
 */
struct SurrogateState {
  /* sensing block, per (k, u, c): slack time psi (s) and slack rate iota (bit/s) */
  std::vector<double> psi, iota;
  /* upload block, per (k, u, t) */
  std::vector<double> g;      /* per-slot upload time (s) */
  std::vector<double> z;      /* per-slot rate (bit/s) */
  std::vector<double> gamma;  /* uplink SNR */
  std::vector<double> alpha;  /* squared BS distance (m^2) */
  /* downlink block, per k */
  std::vector<double> theta;  /* download time (s) */
  std::vector<double> xi;     /* downlink SNR */

  static constexpr double kFloorTime = 1e-6;
  static constexpr double kFloorRateScaled = 1e-6; /* in units of the rate scale */
  static constexpr double kFloorSnr = 1e-9;
};

inline SurrogateState init_surrogate_state(const ScenarioConfig& cfg, const DecisionVector& d) {
  SurrogateState st;
  const int K = d.K, C = d.C, U = d.U, T = d.T;
  st.psi.resize(static_cast<std::size_t>(K) * U * C);
  st.iota.resize(st.psi.size());
  st.g.resize(static_cast<std::size_t>(K) * U * T);
  st.z.resize(st.g.size());
  st.gamma.resize(st.g.size());
  st.alpha.resize(st.g.size());
  st.theta.resize(static_cast<std::size_t>(K));
  st.xi.resize(st.theta.size());

  const double rate_scale = radar_rate_scale(cfg);
  const double per_slot = (cfg.embed_payload + cfg.model_payload) / T;
  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      for (int c = 0; c < C; ++c) {
        const double rate = std::max(
            rate_scale * SurrogateState::kFloorRateScaled,
            radar_rate(cfg, cfg.target_positions[static_cast<std::size_t>(c)],
                       d.p_se[d.ku(k, u)]));
        const std::size_t idx = (static_cast<std::size_t>(k) * U + u) * C + c;
        st.iota[idx] = rate;
        st.psi[idx] = std::max(SurrogateState::kFloorTime,
                               cfg.samples_per_uav[static_cast<std::size_t>(u)] / rate);
      }
      for (int t = 0; t < T; ++t) {
        const std::size_t idx = d.kut(k, u, t);
        const double d2 = bs_dist2(cfg, d.traj_x[idx], d.traj_y[idx]);
        const double snr = std::max(SurrogateState::kFloorSnr,
                                    snr_gain(cfg) * d.p_cm[idx] / d2);
        st.alpha[idx] = d2;
        st.gamma[idx] = snr;
        st.z[idx] = std::max(cfg.bandwidth_uav * SurrogateState::kFloorRateScaled,
                             cfg.bandwidth_uav * log2_1p(snr));
        st.g[idx] = std::max(SurrogateState::kFloorTime, per_slot / st.z[idx]);
      }
    }
    const int last = T - 1;
    const double d2 = bs_dist2(cfg, d.traj_x[d.kut(k, 0, last)], d.traj_y[d.kut(k, 0, last)]);
    st.xi[static_cast<std::size_t>(k)] =
        std::max(SurrogateState::kFloorSnr,
                 snr_gain(cfg) * d.p_bs[static_cast<std::size_t>(k)] / d2);
    st.theta[static_cast<std::size_t>(k)] =
        std::max(SurrogateState::kFloorTime, download_time(cfg, d, k, 0));
  }
  return st;
}

}  // namespace uavfml
