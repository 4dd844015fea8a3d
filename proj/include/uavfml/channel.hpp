#pragma once

#include <cmath>
#include <limits>

#include "uavfml/scenario.hpp"

namespace uavfml {

/*
 * Channel and rate model. All rates in bit/s, powers in W, distances in m.
 * The UAV-BS link uses free-space pathloss beta_0 / d^2 with the BS at the
 * origin; gamma0 = beta_0 / sigma^2 folds the noise floor into one constant.
 */

inline double log2_1p(double x) { return std::log1p(x) * 1.4426950408889634; }

inline double snr_gain(const ScenarioConfig& cfg) {
  return cfg.ref_channel_gain / cfg.noise_power;
}

/* Squared distance from a UAV hovering at (x, y, altitude) to the BS. */
inline double bs_dist2(const ScenarioConfig& cfg, double x, double y) {
  return x * x + y * y + cfg.altitude * cfg.altitude;
}

inline double uav_bs_distance(const ScenarioConfig& cfg, double x, double y) {
  return std::sqrt(bs_dist2(cfg, x, y));
}

/* Uplink rate of one UAV in one slot. */
inline double uplink_rate(const ScenarioConfig& cfg, double p_cm, double x, double y) {
  return cfg.bandwidth_uav * log2_1p(snr_gain(cfg) * p_cm / bs_dist2(cfg, x, y));
}

/* Downlink broadcast rate from the BS toward position (x, y). */
inline double downlink_rate(const ScenarioConfig& cfg, double p_bs, double x, double y) {
  return cfg.bandwidth_bs * log2_1p(snr_gain(cfg) * p_bs / bs_dist2(cfg, x, y));
}

/* Sensing happens from the hover point: the start position lifted to altitude. */
inline double sensing_dist2(const ScenarioConfig& cfg, const Vec3& target) {
  const double dx = cfg.start_pos.x - target.x;
  const double dy = cfg.start_pos.y - target.y;
  const double dz = cfg.altitude - target.z;
  return dx * dx + dy * dy + dz * dz;
}

/* Round-trip radar gain toward one target: g * beta_hat * g with
   g = alpha_hat / d^2. */
inline double radar_gain(const ScenarioConfig& cfg, const Vec3& target) {
  const double g = cfg.radar_pathloss_const / sensing_dist2(cfg, target);
  return g * cfg.radar_reflectivity * g;
}

/* Coefficient rho of the radar SNR term: the term is rho * p_se. */
inline double radar_snr_coef(const ScenarioConfig& cfg, const Vec3& target) {
  const double b3 = cfg.bandwidth_uav * cfg.bandwidth_uav * cfg.bandwidth_uav;
  return 2.0 * cfg.radar_pred_var * cfg.radar_waveform_const * cfg.radar_waveform_const * b3 *
         cfg.radar_pulse * radar_gain(cfg, target) / cfg.noise_power;
}

/* Rate prefactor duty / (2 * pulse). */
inline double radar_rate_scale(const ScenarioConfig& cfg) {
  return cfg.radar_duty / (2.0 * cfg.radar_pulse);
}

/* Equivalent sensing rate toward one target. */
inline double radar_rate(const ScenarioConfig& cfg, const Vec3& target, double p_se) {
  return radar_rate_scale(cfg) * log2_1p(radar_snr_coef(cfg, target) * p_se);
}

/* Smallest sensing power meeting the rate threshold nu for one target;
   +inf when the coefficient vanishes. */
inline double min_power_for_threshold(const ScenarioConfig& cfg, const Vec3& target) {
  const double rho = radar_snr_coef(cfg, target);
  if (!(rho > 0.0)) return std::numeric_limits<double>::infinity();
  const double need = cfg.radar_rate_threshold / radar_rate_scale(cfg);
  return (std::exp2(need) - 1.0) / rho;
}

}  // namespace uavfml
