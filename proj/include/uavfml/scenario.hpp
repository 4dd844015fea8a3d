#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/units.hpp"

namespace uavfml {

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
};

struct Vec3 {
  double x = 0.0;
  double y = 0.0;
  double z = 0.0;
};

inline double dist2(const Vec2& a, const Vec2& b) {
  const double dx = a.x - b.x, dy = a.y - b.y;
  return dx * dx + dy * dy;
}

/* Training hyperparameters, kept flat in the config file. */
struct FlConfig {
  double learning_rate = 0.01;
  int batch_size = 32;
  int embed_dim = 16;
  int hidden_dim = 64;
  int num_classes = 6;
  double dirichlet_alpha = 0.3;
  int probe_set_size = 256;
};

/*
 * Full scenario description: fleet, geometry, channel, radar, compute and
 * payload parameters plus training hyperparameters. SI units everywhere;
 * dB/dBm only at the config-file boundary.
 */
struct ScenarioConfig {
  int num_uavs = 20;
  int num_targets = 10;
  int num_modalities = 2;
  int num_rounds = 2;
  int local_iters = 15;   /* per-round local SGD steps, also the latency J */
  int server_iters = 10;  /* BS-side training iterations J' */
  int time_slots = 6;

  double flight_time = 100.0;  /* s */
  double altitude = 100.0;     /* m */
  double v_max = 25.0;         /* m/s */
  Vec2 start_pos{1800.0, 0.0};
  Vec2 end_pos{100.0, 0.0};
  std::vector<Vec3> target_positions;  /* one per target, ground level */

  double bandwidth_uav = 2.0e7;     /* Hz */
  double bandwidth_bs = 2.0e7;      /* Hz */
  double ref_channel_gain = 1.0e-5; /* beta_0 at 1 m */
  double noise_power = 1.0e-11;     /* W (-80 dBm) */

  /* Radar sensing. Defaults put the sensing SNR term at O(10) for the
     default geometry at half max power. */
  double radar_duty = 0.1;
  double radar_pulse = 1.0e-4;          /* s */
  double radar_waveform_const = 1.0e-8; /* gamma_hat */
  double radar_pred_var = 4.0e-4;       /* sigma_pre^2 */
  double radar_reflectivity = 1.0;      /* beta_hat */
  double radar_pathloss_const = 1.0;    /* alpha_hat */
  double radar_rate_threshold = 100.0;  /* nu, bit/s */

  std::vector<double> samples_per_uav;   /* D_u, bits-equivalent sample count */
  std::vector<double> cycles_per_sample; /* C_u, CPU cycles per sample */
  double cycles_per_sample_bs = 1.0e6;   /* C_BS */
  double switched_capacitance = 1.0e-28; /* zeta */

  double embed_payload = 4.0e5;  /* s_e, bits per round */
  double model_payload = 4.0e5;  /* s_l, bits per round */
  double global_payload = 1.6e6; /* s_g, bits per round */

  double p_se_max = 0.31622776601683794; /* 25 dBm */
  double p_cm_max = 0.31622776601683794;
  double p_bs_max = 3.1622776601683795; /* 35 dBm */
  double f_u_max = 2.0e9;
  double f_bs_max = 1.0e10;
  double e_max = 20.0; /* J per UAV over all rounds */

  FlConfig fl;
  std::uint64_t seed = 1;

  int uavs_per_cluster() const { return num_uavs / num_modalities; }
  int cluster_of(int u) const {
    const int base = num_uavs / num_modalities;
    const int m = base > 0 ? u / base : 0;
    return m < num_modalities ? m : num_modalities - 1;
  }
  double slot_duration() const { return flight_time / static_cast<double>(time_slots); }
};

inline std::vector<Vec3> default_target_ring(const Vec2& center, int count) {
  std::vector<Vec3> targets(static_cast<std::size_t>(count));
  for (int c = 0; c < count; ++c) {
    const double frac = count > 1 ? static_cast<double>(c) / (count - 1) : 0.0;
    const double radius = 40.0 + 40.0 * frac;
    const double angle = 6.283185307179586 * c / std::max(count, 1);
    targets[static_cast<std::size_t>(c)] = {center.x + radius * std::cos(angle),
                                            center.y + radius * std::sin(angle), 0.0};
  }
  return targets;
}

inline ScenarioConfig default_scenario() {
  ScenarioConfig cfg;
  cfg.target_positions = default_target_ring(cfg.start_pos, cfg.num_targets);
  cfg.samples_per_uav.resize(static_cast<std::size_t>(cfg.num_uavs));
  for (int u = 0; u < cfg.num_uavs; ++u) {
    cfg.samples_per_uav[static_cast<std::size_t>(u)] = 150.0 + 10.0 * (u % 11);
  }
  cfg.cycles_per_sample.assign(static_cast<std::size_t>(cfg.num_uavs), 1.0e6);
  return cfg;
}

struct ValidationIssue {
  std::string invariant;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationIssue> issues;
  bool ok() const { return issues.empty(); }
  std::string summary() const {
    std::string s;
    for (const auto& i : issues) {
      s += i.invariant;
      s += ": ";
      s += i.detail;
      s += '\n';
    }
    return s;
  }
};

inline std::string format_or_nan(double v) {
  if (std::isnan(v)) return "nan";
  char buf[48];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

inline ValidationReport validate(const ScenarioConfig& cfg) {
  ValidationReport report;
  auto fail = [&report](const std::string& inv, const std::string& detail) {
    report.issues.push_back({inv, detail});
  };
  auto require_count = [&](const char* name, int v) {
    if (v < 1) fail(std::string(name) + " >= 1", std::to_string(v));
  };
  require_count("num_uavs", cfg.num_uavs);
  require_count("num_targets", cfg.num_targets);
  require_count("num_modalities", cfg.num_modalities);
  require_count("local_iters", cfg.local_iters);
  require_count("server_iters", cfg.server_iters);
  if (cfg.num_rounds < 0) fail("num_rounds >= 0", std::to_string(cfg.num_rounds));
  if (cfg.time_slots < 2) fail("time_slots >= 2", std::to_string(cfg.time_slots));
  if (cfg.num_modalities > cfg.num_uavs) {
    fail("num_modalities <= num_uavs",
         std::to_string(cfg.num_modalities) + " > " + std::to_string(cfg.num_uavs));
  }
  if (cfg.target_positions.size() != static_cast<std::size_t>(cfg.num_targets)) {
    fail("target_positions size == num_targets", std::to_string(cfg.target_positions.size()));
  }
  if (cfg.samples_per_uav.size() != static_cast<std::size_t>(cfg.num_uavs)) {
    fail("samples_per_uav size == num_uavs", std::to_string(cfg.samples_per_uav.size()));
  }
  if (cfg.cycles_per_sample.size() != static_cast<std::size_t>(cfg.num_uavs)) {
    fail("cycles_per_sample size == num_uavs", std::to_string(cfg.cycles_per_sample.size()));
  }
  auto require_pos = [&](const char* name, double v) {
    if (!(v > 0.0)) fail(std::string(name) + " > 0", format_or_nan(v));
  };
  require_pos("flight_time", cfg.flight_time);
  require_pos("altitude", cfg.altitude);
  require_pos("v_max", cfg.v_max);
  require_pos("bandwidth_uav", cfg.bandwidth_uav);
  require_pos("bandwidth_bs", cfg.bandwidth_bs);
  require_pos("ref_channel_gain", cfg.ref_channel_gain);
  require_pos("noise_power", cfg.noise_power);
  require_pos("radar_duty", cfg.radar_duty);
  if (cfg.radar_duty > 1.0) fail("radar_duty <= 1", format_or_nan(cfg.radar_duty));
  require_pos("radar_pulse", cfg.radar_pulse);
  require_pos("radar_waveform_const", cfg.radar_waveform_const);
  require_pos("radar_pred_var", cfg.radar_pred_var);
  require_pos("radar_reflectivity", cfg.radar_reflectivity);
  require_pos("radar_pathloss_const", cfg.radar_pathloss_const);
  require_pos("radar_rate_threshold", cfg.radar_rate_threshold);
  require_pos("cycles_per_sample_bs", cfg.cycles_per_sample_bs);
  require_pos("switched_capacitance", cfg.switched_capacitance);
  require_pos("embed_payload", cfg.embed_payload);
  require_pos("model_payload", cfg.model_payload);
  require_pos("global_payload", cfg.global_payload);
  require_pos("p_se_max", cfg.p_se_max);
  require_pos("p_cm_max", cfg.p_cm_max);
  require_pos("p_bs_max", cfg.p_bs_max);
  require_pos("f_u_max", cfg.f_u_max);
  require_pos("f_bs_max", cfg.f_bs_max);
  if (!(cfg.e_max >= 0.0)) fail("e_max >= 0", format_or_nan(cfg.e_max));
  for (std::size_t u = 0; u < cfg.samples_per_uav.size(); ++u) {
    if (!(cfg.samples_per_uav[u] > 0.0)) {
      fail("samples_per_uav > 0", "uav " + std::to_string(u));
      break;
    }
  }
  for (std::size_t u = 0; u < cfg.cycles_per_sample.size(); ++u) {
    if (!(cfg.cycles_per_sample[u] > 0.0)) {
      fail("cycles_per_sample > 0", "uav " + std::to_string(u));
      break;
    }
  }
  const double reach = std::sqrt(dist2(cfg.start_pos, cfg.end_pos));
  if (reach > cfg.v_max * cfg.flight_time) {
    fail("||start_pos - end_pos|| <= v_max * flight_time",
         format_or_nan(reach) + " > " + format_or_nan(cfg.v_max * cfg.flight_time));
  }
  require_pos("learning_rate", cfg.fl.learning_rate);
  require_count("batch_size", cfg.fl.batch_size);
  require_count("embed_dim", cfg.fl.embed_dim);
  require_count("hidden_dim", cfg.fl.hidden_dim);
  if (cfg.fl.num_classes < 2) fail("num_classes >= 2", std::to_string(cfg.fl.num_classes));
  require_pos("dirichlet_alpha", cfg.fl.dirichlet_alpha);
  require_count("probe_set_size", cfg.fl.probe_set_size);
  return report;
}

/* Deterministic instance jitter used by multi-seed experiments. */
inline ScenarioConfig perturbed_scenario(const ScenarioConfig& base, std::uint64_t seed) {
  ScenarioConfig cfg = base;
  cfg.seed = seed;
  Rng rng(seed, 0xacce55);
  for (auto& d : cfg.samples_per_uav) {
    d = std::max(10.0, std::floor(d * rng.uniform(0.7, 1.3)));
  }
  cfg.embed_payload *= rng.uniform(0.8, 1.2);
  cfg.model_payload *= rng.uniform(0.8, 1.2);
  cfg.global_payload *= rng.uniform(0.8, 1.2);
  for (int c = 0; c < cfg.num_targets; ++c) {
    const double radius = rng.uniform(30.0, 90.0);
    const double angle = rng.uniform(0.0, 6.283185307179586);
    cfg.target_positions[static_cast<std::size_t>(c)] = {
        cfg.start_pos.x + radius * std::cos(angle), cfg.start_pos.y + radius * std::sin(angle),
        0.0};
  }
  return cfg;
}

/* One-UAV instance small enough for the exhaustive oracle. Start, end and
   base station stay collinear so the oracle's 1-D trajectory family contains
   the unrestricted optimum. */
inline ScenarioConfig tiny_scenario(std::uint64_t seed) {
  ScenarioConfig cfg = default_scenario();
  cfg.seed = seed;
  cfg.num_uavs = 1;
  cfg.num_targets = 1;
  cfg.num_modalities = 1;
  cfg.num_rounds = 1;
  cfg.time_slots = 3;
  Rng rng(seed, 0x717e);
  cfg.start_pos = {rng.uniform(600.0, 1000.0), 0.0};
  cfg.end_pos = {rng.uniform(80.0, 160.0), 0.0};
  cfg.target_positions = {{cfg.start_pos.x - rng.uniform(30.0, 70.0), rng.uniform(-40.0, 40.0),
                           0.0}};
  cfg.samples_per_uav = {std::floor(rng.uniform(150.0, 260.0))};
  cfg.cycles_per_sample = {1.0e6};
  cfg.embed_payload = 4.0e5 * rng.uniform(0.8, 1.2);
  cfg.model_payload = 4.0e5 * rng.uniform(0.8, 1.2);
  cfg.global_payload = 1.6e6 * rng.uniform(0.8, 1.2);
  cfg.e_max = 50.0;
  return cfg;
}

namespace detail {

inline void assign_vec2(const nlohmann::json& j, const std::string& key, Vec2& out) {
  if (!j.is_array() || j.size() != 2) throw ConfigError(key + " must be [x, y]");
  out.x = j[0].get<double>();
  out.y = j[1].get<double>();
}

}  // namespace detail

/*
 * Flat JSON config. Missing keys keep the documented defaults, unknown keys
 * are an error, and any power key may instead be given with a _dbm suffix.
 */
inline ScenarioConfig load_scenario_json(const nlohmann::json& j) {
  if (!j.is_object()) throw ConfigError("config root must be a JSON object");

  static const char* kDbmAware[] = {"noise_power", "p_se_max", "p_cm_max", "p_bs_max"};

  ScenarioConfig cfg = default_scenario();
  /* Counts first so dependent array defaults resize before explicit values land. */
  if (j.contains("num_uavs")) cfg.num_uavs = j["num_uavs"].get<int>();
  if (j.contains("num_targets")) cfg.num_targets = j["num_targets"].get<int>();
  if (j.contains("start_pos")) detail::assign_vec2(j["start_pos"], "start_pos", cfg.start_pos);
  cfg.target_positions = default_target_ring(cfg.start_pos, std::max(cfg.num_targets, 0));
  cfg.samples_per_uav.resize(static_cast<std::size_t>(std::max(cfg.num_uavs, 0)));
  for (int u = 0; u < cfg.num_uavs; ++u) {
    cfg.samples_per_uav[static_cast<std::size_t>(u)] = 150.0 + 10.0 * (u % 11);
  }
  cfg.cycles_per_sample.assign(static_cast<std::size_t>(std::max(cfg.num_uavs, 0)), 1.0e6);

  auto broadcast_or_array = [&](const nlohmann::json& v, const char* key,
                                std::vector<double>& out) {
    if (v.is_number()) {
      out.assign(out.size(), v.get<double>());
    } else if (v.is_array()) {
      if (v.size() != out.size()) {
        throw ConfigError(std::string(key) + " must have one entry per UAV");
      }
      for (std::size_t i = 0; i < out.size(); ++i) out[i] = v[i].get<double>();
    } else {
      throw ConfigError(std::string(key) + " must be a number or an array");
    }
  };

  for (const auto& [key, value] : j.items()) {
    if (key == "num_uavs" || key == "num_targets" || key == "start_pos") {
      continue; /* handled above */
    } else if (key == "num_modalities") {
      cfg.num_modalities = value.get<int>();
    } else if (key == "num_rounds") {
      cfg.num_rounds = value.get<int>();
    } else if (key == "local_iters") {
      cfg.local_iters = value.get<int>();
    } else if (key == "server_iters") {
      cfg.server_iters = value.get<int>();
    } else if (key == "time_slots") {
      cfg.time_slots = value.get<int>();
    } else if (key == "flight_time") {
      cfg.flight_time = value.get<double>();
    } else if (key == "altitude") {
      cfg.altitude = value.get<double>();
    } else if (key == "v_max") {
      cfg.v_max = value.get<double>();
    } else if (key == "end_pos") {
      detail::assign_vec2(value, "end_pos", cfg.end_pos);
    } else if (key == "target_positions") {
      if (!value.is_array() || value.size() != static_cast<std::size_t>(cfg.num_targets)) {
        throw ConfigError("target_positions must list num_targets entries");
      }
      cfg.target_positions.clear();
      for (const auto& t : value) {
        if (!t.is_array() || t.size() != 3) throw ConfigError("each target must be [x, y, z]");
        cfg.target_positions.push_back({t[0].get<double>(), t[1].get<double>(),
                                        t[2].get<double>()});
      }
    } else if (key == "bandwidth_uav") {
      cfg.bandwidth_uav = value.get<double>();
    } else if (key == "bandwidth_bs") {
      cfg.bandwidth_bs = value.get<double>();
    } else if (key == "ref_channel_gain") {
      cfg.ref_channel_gain = value.get<double>();
    } else if (key == "noise_power") {
      cfg.noise_power = value.get<double>();
    } else if (key == "noise_power_dbm") {
      cfg.noise_power = dbm_to_watts(value.get<double>());
    } else if (key == "radar_duty") {
      cfg.radar_duty = value.get<double>();
    } else if (key == "radar_pulse") {
      cfg.radar_pulse = value.get<double>();
    } else if (key == "radar_waveform_const") {
      cfg.radar_waveform_const = value.get<double>();
    } else if (key == "radar_pred_var") {
      cfg.radar_pred_var = value.get<double>();
    } else if (key == "radar_reflectivity") {
      cfg.radar_reflectivity = value.get<double>();
    } else if (key == "radar_pathloss_const") {
      cfg.radar_pathloss_const = value.get<double>();
    } else if (key == "radar_rate_threshold") {
      cfg.radar_rate_threshold = value.get<double>();
    } else if (key == "samples_per_uav") {
      broadcast_or_array(value, "samples_per_uav", cfg.samples_per_uav);
    } else if (key == "cycles_per_sample") {
      broadcast_or_array(value, "cycles_per_sample", cfg.cycles_per_sample);
    } else if (key == "cycles_per_sample_bs") {
      cfg.cycles_per_sample_bs = value.get<double>();
    } else if (key == "switched_capacitance") {
      cfg.switched_capacitance = value.get<double>();
    } else if (key == "embed_payload") {
      cfg.embed_payload = value.get<double>();
    } else if (key == "model_payload") {
      cfg.model_payload = value.get<double>();
    } else if (key == "global_payload") {
      cfg.global_payload = value.get<double>();
    } else if (key == "p_se_max") {
      cfg.p_se_max = value.get<double>();
    } else if (key == "p_se_max_dbm") {
      cfg.p_se_max = dbm_to_watts(value.get<double>());
    } else if (key == "p_cm_max") {
      cfg.p_cm_max = value.get<double>();
    } else if (key == "p_cm_max_dbm") {
      cfg.p_cm_max = dbm_to_watts(value.get<double>());
    } else if (key == "p_bs_max") {
      cfg.p_bs_max = value.get<double>();
    } else if (key == "p_bs_max_dbm") {
      cfg.p_bs_max = dbm_to_watts(value.get<double>());
    } else if (key == "f_u_max") {
      cfg.f_u_max = value.get<double>();
    } else if (key == "f_bs_max") {
      cfg.f_bs_max = value.get<double>();
    } else if (key == "e_max") {
      cfg.e_max = value.get<double>();
    } else if (key == "learning_rate") {
      cfg.fl.learning_rate = value.get<double>();
    } else if (key == "batch_size") {
      cfg.fl.batch_size = value.get<int>();
    } else if (key == "embed_dim") {
      cfg.fl.embed_dim = value.get<int>();
    } else if (key == "hidden_dim") {
      cfg.fl.hidden_dim = value.get<int>();
    } else if (key == "num_classes") {
      cfg.fl.num_classes = value.get<int>();
    } else if (key == "dirichlet_alpha") {
      cfg.fl.dirichlet_alpha = value.get<double>();
    } else if (key == "probe_set_size") {
      cfg.fl.probe_set_size = value.get<int>();
    } else if (key == "seed") {
      cfg.seed = value.get<std::uint64_t>();
    } else {
      throw ConfigError("unknown config key: " + key);
    }
  }

  for (const char* base : kDbmAware) {
    if (j.contains(base) && j.contains(std::string(base) + "_dbm")) {
      throw ConfigError(std::string("both ") + base + " and " + base + "_dbm given");
    }
  }
  return cfg;
}

inline ScenarioConfig load_scenario_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config: " + path);
  nlohmann::json j;
  try {
    in >> j;
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("config parse error in " + path + ": " + e.what());
  }
  return load_scenario_json(j);
}

inline nlohmann::json scenario_to_json(const ScenarioConfig& cfg) {
  nlohmann::json j;
  j["num_uavs"] = cfg.num_uavs;
  j["num_targets"] = cfg.num_targets;
  j["num_modalities"] = cfg.num_modalities;
  j["num_rounds"] = cfg.num_rounds;
  j["local_iters"] = cfg.local_iters;
  j["server_iters"] = cfg.server_iters;
  j["time_slots"] = cfg.time_slots;
  j["flight_time"] = cfg.flight_time;
  j["altitude"] = cfg.altitude;
  j["v_max"] = cfg.v_max;
  j["start_pos"] = {cfg.start_pos.x, cfg.start_pos.y};
  j["end_pos"] = {cfg.end_pos.x, cfg.end_pos.y};
  auto targets = nlohmann::json::array();
  for (const auto& t : cfg.target_positions) targets.push_back({t.x, t.y, t.z});
  j["target_positions"] = targets;
  j["bandwidth_uav"] = cfg.bandwidth_uav;
  j["bandwidth_bs"] = cfg.bandwidth_bs;
  j["ref_channel_gain"] = cfg.ref_channel_gain;
  j["noise_power"] = cfg.noise_power;
  j["radar_duty"] = cfg.radar_duty;
  j["radar_pulse"] = cfg.radar_pulse;
  j["radar_waveform_const"] = cfg.radar_waveform_const;
  j["radar_pred_var"] = cfg.radar_pred_var;
  j["radar_reflectivity"] = cfg.radar_reflectivity;
  j["radar_pathloss_const"] = cfg.radar_pathloss_const;
  j["radar_rate_threshold"] = cfg.radar_rate_threshold;
  j["samples_per_uav"] = cfg.samples_per_uav;
  j["cycles_per_sample"] = cfg.cycles_per_sample;
  j["cycles_per_sample_bs"] = cfg.cycles_per_sample_bs;
  j["switched_capacitance"] = cfg.switched_capacitance;
  j["embed_payload"] = cfg.embed_payload;
  j["model_payload"] = cfg.model_payload;
  j["global_payload"] = cfg.global_payload;
  j["p_se_max"] = cfg.p_se_max;
  j["p_cm_max"] = cfg.p_cm_max;
  j["p_bs_max"] = cfg.p_bs_max;
  j["f_u_max"] = cfg.f_u_max;
  j["f_bs_max"] = cfg.f_bs_max;
  j["e_max"] = cfg.e_max;
  j["learning_rate"] = cfg.fl.learning_rate;
  j["batch_size"] = cfg.fl.batch_size;
  j["embed_dim"] = cfg.fl.embed_dim;
  j["hidden_dim"] = cfg.fl.hidden_dim;
  j["num_classes"] = cfg.fl.num_classes;
  j["dirichlet_alpha"] = cfg.fl.dirichlet_alpha;
  j["probe_set_size"] = cfg.fl.probe_set_size;
  j["seed"] = cfg.seed;
  return j;
}

/* Named parameters reachable by the sweep tool. */
inline double* sweep_target(ScenarioConfig& cfg, const std::string& name) {
  if (name == "p_se_max") return &cfg.p_se_max;
  if (name == "p_cm_max") return &cfg.p_cm_max;
  if (name == "p_bs_max") return &cfg.p_bs_max;
  if (name == "f_u_max") return &cfg.f_u_max;
  if (name == "f_bs_max") return &cfg.f_bs_max;
  if (name == "e_max") return &cfg.e_max;
  if (name == "bandwidth_uav") return &cfg.bandwidth_uav;
  if (name == "bandwidth_bs") return &cfg.bandwidth_bs;
  if (name == "embed_payload") return &cfg.embed_payload;
  if (name == "model_payload") return &cfg.model_payload;
  if (name == "global_payload") return &cfg.global_payload;
  if (name == "radar_rate_threshold") return &cfg.radar_rate_threshold;
  if (name == "v_max") return &cfg.v_max;
  return nullptr;
}

}  // namespace uavfml
