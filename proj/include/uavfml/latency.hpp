#pragma once

#include <algorithm>
#include <cmath>
#include <vector>

#include "uavfml/channel.hpp"
#include "uavfml/decision.hpp"
#include "uavfml/scenario.hpp"

namespace uavfml {

/*
 * Per-round, per-UAV latency and energy model. A round is: sense, train
 * locally, upload embeddings, BS trains, upload local models, download the
 * global model. The two uplink payloads are split equally across the T
 * flight slots; the downlink uses the final slot's position.
 */

struct LatencyBreakdown {
  double t_sense = 0.0;
  double t_train = 0.0;
  double t_embed_up = 0.0;
  double t_model_up = 0.0;
  double t_bs_train = 0.0;
  double t_download = 0.0;

  double total() const {
    return t_sense + t_train + t_embed_up + t_model_up + t_bs_train + t_download;
  }
};

struct EnergyBreakdown {
  double e_sense = 0.0;
  double e_train = 0.0;
  double e_embed_up = 0.0;
  double e_model_up = 0.0;

  double total() const { return e_sense + e_train + e_embed_up + e_model_up; }
};

struct RoundBreakdown {
  LatencyBreakdown latency;
  EnergyBreakdown energy;
  double energy_total() const { return energy.total(); }
};

inline double sensing_time(const ScenarioConfig& cfg, const DecisionVector& d, int k, int u) {
  double t = 0.0;
  for (int c = 0; c < d.C; ++c) {
    const double x = d.x(k, c, u);
    if (x <= 0.0) continue;
    const double rate = radar_rate(cfg, cfg.target_positions[static_cast<std::size_t>(c)],
                                   d.p_se[d.ku(k, u)]);
    t += x * cfg.samples_per_uav[static_cast<std::size_t>(u)] / rate;
  }
  return t;
}

inline double local_train_time(const ScenarioConfig& cfg, const DecisionVector& d, int k, int u) {
  return cfg.local_iters * cfg.cycles_per_sample[static_cast<std::size_t>(u)] *
         cfg.samples_per_uav[static_cast<std::size_t>(u)] / d.f_u[d.ku(k, u)];
}

inline double local_train_energy(const ScenarioConfig& cfg, const DecisionVector& d, int k,
                                 int u) {
  const double f = d.f_u[d.ku(k, u)];
  return cfg.local_iters * cfg.switched_capacitance *
         cfg.cycles_per_sample[static_cast<std::size_t>(u)] *
         cfg.samples_per_uav[static_cast<std::size_t>(u)] * f * f;
}

/* Upload time of `payload` bits split equally over the T slots. */
inline double upload_time(const ScenarioConfig& cfg, const DecisionVector& d, int k, int u,
                          double payload) {
  const double per_slot = payload / d.T;
  double t = 0.0;
  for (int s = 0; s < d.T; ++s) {
    const double rate = uplink_rate(cfg, d.p_cm[d.kut(k, u, s)], d.traj_x[d.kut(k, u, s)],
                                    d.traj_y[d.kut(k, u, s)]);
    t += per_slot / rate;
  }
  return t;
}

inline double upload_energy(const ScenarioConfig& cfg, const DecisionVector& d, int k, int u,
                            double payload) {
  const double per_slot = payload / d.T;
  double e = 0.0;
  for (int s = 0; s < d.T; ++s) {
    const double p = d.p_cm[d.kut(k, u, s)];
    const double rate =
        uplink_rate(cfg, p, d.traj_x[d.kut(k, u, s)], d.traj_y[d.kut(k, u, s)]);
    e += p * per_slot / rate;
  }
  return e;
}

inline double bs_train_time(const ScenarioConfig& cfg, const DecisionVector& d, int k) {
  return cfg.server_iters * cfg.cycles_per_sample_bs * cfg.fl.probe_set_size /
         d.f_bs[static_cast<std::size_t>(k)];
}

inline double download_time(const ScenarioConfig& cfg, const DecisionVector& d, int k, int u) {
  const int last = d.T - 1;
  const double rate = downlink_rate(cfg, d.p_bs[static_cast<std::size_t>(k)],
                                    d.traj_x[d.kut(k, u, last)], d.traj_y[d.kut(k, u, last)]);
  return cfg.global_payload / rate;
}

inline RoundBreakdown round_breakdown(const ScenarioConfig& cfg, const DecisionVector& d, int k,
                                      int u) {
  RoundBreakdown rb;
  rb.latency.t_sense = sensing_time(cfg, d, k, u);
  rb.latency.t_train = local_train_time(cfg, d, k, u);
  rb.latency.t_embed_up = upload_time(cfg, d, k, u, cfg.embed_payload);
  rb.latency.t_model_up = upload_time(cfg, d, k, u, cfg.model_payload);
  rb.latency.t_bs_train = bs_train_time(cfg, d, k);
  rb.latency.t_download = download_time(cfg, d, k, u);
  rb.energy.e_sense = d.p_se[d.ku(k, u)] * rb.latency.t_sense;
  rb.energy.e_train = local_train_energy(cfg, d, k, u);
  rb.energy.e_embed_up = upload_energy(cfg, d, k, u, cfg.embed_payload);
  rb.energy.e_model_up = upload_energy(cfg, d, k, u, cfg.model_payload);
  return rb;
}

/* Round latency is set by the slowest UAV. */
inline double round_latency(const ScenarioConfig& cfg, const DecisionVector& d, int k) {
  double worst = 0.0;
  for (int u = 0; u < d.U; ++u) {
    worst = std::max(worst, round_breakdown(cfg, d, k, u).latency.total());
  }
  return worst;
}

inline double total_latency(const ScenarioConfig& cfg, const DecisionVector& d) {
  double sum = 0.0;
  for (int k = 0; k < d.K; ++k) sum += round_latency(cfg, d, k);
  return sum;
}

inline double uav_total_energy(const ScenarioConfig& cfg, const DecisionVector& d, int u) {
  double e = 0.0;
  for (int k = 0; k < d.K; ++k) e += round_breakdown(cfg, d, k, u).energy_total();
  return e;
}

}  // namespace uavfml
