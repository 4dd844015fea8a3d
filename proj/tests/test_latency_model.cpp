#include <catch2/catch_amalgamated.hpp>

#include "uavfml/channel.hpp"
#include "uavfml/initial.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/sca/feasibility.hpp"

using namespace uavfml;

namespace {

ScenarioConfig small_cfg() {
  ScenarioConfig cfg = default_scenario();
  cfg.num_uavs = 4;
  cfg.num_targets = 3;
  cfg.target_positions = default_target_ring(cfg.start_pos, 3);
  cfg.samples_per_uav.assign(4, 200.0);
  cfg.cycles_per_sample.assign(4, 1.0e6);
  return cfg;
}

}  // namespace

TEST_CASE("uplink rate follows the log-SNR law") {
  const ScenarioConfig cfg = default_scenario();
  const double x = 500.0, y = 0.0;
  const double p = 0.1;
  const double d2 = bs_dist2(cfg, x, y);
  const double expected =
      cfg.bandwidth_uav * log2_1p(snr_gain(cfg) * p / d2);
  CHECK(uplink_rate(cfg, p, x, y) == Catch::Approx(expected).epsilon(1e-12));
  /* more power, more rate; further away, less rate */
  CHECK(uplink_rate(cfg, 2 * p, x, y) > uplink_rate(cfg, p, x, y));
  CHECK(uplink_rate(cfg, p, 2 * x, y) < uplink_rate(cfg, p, x, y));
}

TEST_CASE("radar rate scales with duty cycle over pulse width") {
  const ScenarioConfig cfg = default_scenario();
  CHECK(radar_rate_scale(cfg) ==
        Catch::Approx(cfg.radar_duty / (2.0 * cfg.radar_pulse)));
  const Vec3 target = cfg.target_positions[0];
  const double lo = radar_rate(cfg, target, 0.01);
  const double hi = radar_rate(cfg, target, 0.3);
  CHECK(hi > lo);
  CHECK(lo > 0.0);
}

TEST_CASE("minimum sensing power hits the rate threshold exactly") {
  const ScenarioConfig cfg = default_scenario();
  const Vec3 target = cfg.target_positions[2];
  const double p = min_power_for_threshold(cfg, target);
  REQUIRE(p > 0.0);
  CHECK(radar_rate(cfg, target, p) ==
        Catch::Approx(cfg.radar_rate_threshold).epsilon(1e-9));
}

TEST_CASE("sensing time counts only assigned targets") {
  const ScenarioConfig cfg = small_cfg();
  DecisionVector d = initial_feasible_point(cfg);
  const int u = 0;
  DecisionVector none = d;
  for (int c = 0; c < none.C; ++c) none.x(0, c, u) = 0.0;
  CHECK(sensing_time(cfg, none, 0, u) == 0.0);
  CHECK(sensing_time(cfg, d, 0, u) >= 0.0);
}

TEST_CASE("unit-ratio sensing and training times") {
  ScenarioConfig cfg = small_cfg();
  DecisionVector d = initial_feasible_point(cfg);
  /* one target, rate R, D samples -> D/R seconds */
  for (int c = 0; c < d.C; ++c)
    for (int u = 0; u < d.U; ++u) d.x(0, c, u) = 0.0;
  d.x(0, 0, 1) = 1.0;
  const double rate = radar_rate(cfg, cfg.target_positions[0], d.p_se[d.ku(0, 1)]);
  CHECK(sensing_time(cfg, d, 0, 1) ==
        Catch::Approx(cfg.samples_per_uav[1] / rate).epsilon(1e-12));

  /* J * C * D / f */
  const double expected_train =
      cfg.local_iters * cfg.cycles_per_sample[1] * cfg.samples_per_uav[1] / d.f_u[d.ku(0, 1)];
  CHECK(local_train_time(cfg, d, 0, 1) == Catch::Approx(expected_train).epsilon(1e-12));
}

TEST_CASE("upload splits the payload equally across slots") {
  const ScenarioConfig cfg = small_cfg();
  const DecisionVector d = initial_feasible_point(cfg);
  double manual = 0.0;
  for (int s = 0; s < d.T; ++s) {
    const double r = uplink_rate(cfg, d.p_cm[d.kut(0, 0, s)], d.traj_x[d.kut(0, 0, s)],
                                 d.traj_y[d.kut(0, 0, s)]);
    manual += cfg.embed_payload / d.T / r;
  }
  CHECK(upload_time(cfg, d, 0, 0, cfg.embed_payload) == Catch::Approx(manual).epsilon(1e-12));
  /* energy is power-weighted time of the same split */
  double manual_e = 0.0;
  for (int s = 0; s < d.T; ++s) {
    const double p = d.p_cm[d.kut(0, 0, s)];
    const double r = uplink_rate(cfg, p, d.traj_x[d.kut(0, 0, s)], d.traj_y[d.kut(0, 0, s)]);
    manual_e += p * cfg.embed_payload / d.T / r;
  }
  CHECK(upload_energy(cfg, d, 0, 0, cfg.embed_payload) ==
        Catch::Approx(manual_e).epsilon(1e-12));
}

TEST_CASE("round latency is the slowest UAV and totals add up") {
  const ScenarioConfig cfg = small_cfg();
  const DecisionVector d = initial_feasible_point(cfg);
  double worst = 0.0;
  for (int u = 0; u < d.U; ++u) {
    const auto b = round_breakdown(cfg, d, 0, u);
    CHECK(b.latency.total() ==
          Catch::Approx(b.latency.t_sense + b.latency.t_train + b.latency.t_embed_up +
                        b.latency.t_model_up + b.latency.t_bs_train + b.latency.t_download));
    worst = std::max(worst, b.latency.total());
  }
  CHECK(round_latency(cfg, d, 0) == Catch::Approx(worst));
  double total = 0.0;
  for (int k = 0; k < d.K; ++k) total += round_latency(cfg, d, k);
  CHECK(total_latency(cfg, d) == Catch::Approx(total));
}

TEST_CASE("initial point is feasible on the original constraints") {
  for (std::uint64_t seed : {0ULL, 5ULL, 9ULL}) {
    ScenarioConfig cfg = default_scenario();
    if (seed != 0) cfg = perturbed_scenario(cfg, seed);
    const DecisionVector d = initial_feasible_point(cfg);
    const auto report = check_feasibility(cfg, d);
    INFO("seed " << seed << "\n" << report.summary());
    CHECK(report.ok(1e-9));
  }
}

TEST_CASE("initial point stays within speed limits per slot") {
  const ScenarioConfig cfg = default_scenario();
  const DecisionVector d = initial_feasible_point(cfg);
  const double step = cfg.v_max * cfg.slot_duration();
  for (int k = 0; k < d.K; ++k)
    for (int u = 0; u < d.U; ++u)
      for (int t = 0; t + 1 < d.T; ++t) {
        const double dx = d.traj_x[d.kut(k, u, t + 1)] - d.traj_x[d.kut(k, u, t)];
        const double dy = d.traj_y[d.kut(k, u, t + 1)] - d.traj_y[d.kut(k, u, t)];
        CHECK(std::sqrt(dx * dx + dy * dy) <= step * (1 + 1e-12));
      }
}

TEST_CASE("feasibility checker flags violations with names") {
  const ScenarioConfig cfg = small_cfg();
  DecisionVector d = initial_feasible_point(cfg);
  d.p_se[d.ku(0, 0)] = cfg.p_se_max * 3.0;
  const auto report = check_feasibility(cfg, d);
  CHECK_FALSE(report.ok(1e-6));
  REQUIRE_FALSE(report.violations.empty());
  bool found = false;
  for (const auto& v : report.violations) found = found || v.name.find("p_se") != std::string::npos;
  CHECK(found);
}

TEST_CASE("energy audit catches an exhausted budget") {
  ScenarioConfig cfg = small_cfg();
  cfg.e_max = 1.0e-9;
  DecisionVector d = initial_feasible_point(default_scenario());
  ScenarioConfig big = default_scenario();
  big.e_max = 1.0e-9;
  const auto report = check_feasibility(big, d);
  CHECK_FALSE(report.ok(1e-6));
}
