#include <catch2/catch_amalgamated.hpp>

#include <cmath>

#include "uavfml/initial.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/sca/surrogates.hpp"

using namespace uavfml;

TEST_CASE("log surrogate minorizes ln(1+z) and is tight at the iterate") {
  Rng rng(17, 4);
  for (int i = 0; i < 10000; ++i) {
    const double z = std::exp(rng.uniform(-8.0, 8.0));
    const double zi = std::exp(rng.uniform(-8.0, 8.0));
    CHECK(log_surrogate_lhs(z, zi) <= std::log1p(z) + 1e-12);
  }
  for (int i = 0; i < 1000; ++i) {
    const double zi = std::exp(rng.uniform(-8.0, 8.0));
    const double at = log_surrogate_lhs(zi, zi);
    CHECK(std::abs(at - std::log1p(zi)) <= 1e-12 * std::max(1.0, std::abs(std::log1p(zi))));
  }
}

TEST_CASE("bilinear surrogate dominates the product and is tight at the iterate") {
  Rng rng(17, 5);
  for (int i = 0; i < 10000; ++i) {
    const double a = std::exp(rng.uniform(-6.0, 6.0));
    const double b = std::exp(rng.uniform(-6.0, 6.0));
    const double ai = std::exp(rng.uniform(-6.0, 6.0));
    const double bi = std::exp(rng.uniform(-6.0, 6.0));
    CHECK(bilinear_upper(a, b, ai, bi) >= a * b - 1e-12 * std::max(1.0, a * b));
  }
  for (int i = 0; i < 1000; ++i) {
    const double ai = std::exp(rng.uniform(-6.0, 6.0));
    const double bi = std::exp(rng.uniform(-6.0, 6.0));
    const double at = bilinear_upper(ai, bi, ai, bi);
    CHECK(std::abs(at - ai * bi) <= 1e-12 * std::max(1.0, ai * bi));
  }
}

TEST_CASE("linearized square minorizes s^2 and is tight at the iterate") {
  Rng rng(17, 6);
  for (int i = 0; i < 10000; ++i) {
    const double s = std::exp(rng.uniform(-6.0, 6.0));
    const double si = std::exp(rng.uniform(-6.0, 6.0));
    CHECK(square_lower(s, si) <= s * s + 1e-12 * std::max(1.0, s * s));
  }
  for (int i = 0; i < 1000; ++i) {
    const double si = std::exp(rng.uniform(-6.0, 6.0));
    CHECK(std::abs(square_lower(si, si) - si * si) <= 1e-12 * std::max(1.0, si * si));
  }
}

TEST_CASE("surrogate state reproduces the exact model at the incumbent") {
  const ScenarioConfig cfg = default_scenario();
  const DecisionVector d = initial_feasible_point(cfg);
  const SurrogateState st = init_surrogate_state(cfg, d);

  /* uplink slack g sums to the exact upload time */
  for (int k = 0; k < d.K; ++k) {
    for (int u = 0; u < d.U; ++u) {
      double g_sum = 0.0;
      for (int t = 0; t < d.T; ++t) g_sum += st.g[d.kut(k, u, t)];
      const double exact = upload_time(cfg, d, k, u, cfg.embed_payload) +
                           upload_time(cfg, d, k, u, cfg.model_payload);
      CHECK(g_sum == Catch::Approx(exact).epsilon(1e-9));
    }
  }

  /* sensing slack psi matches the exact sensing time of assigned pairs */
  for (int u = 0; u < d.U; ++u) {
    double psi_sum = 0.0;
    for (int c = 0; c < d.C; ++c) {
      if (d.x(0, c, u) > 0.5) psi_sum += st.psi[static_cast<std::size_t>(u) * d.C + c];
    }
    CHECK(psi_sum == Catch::Approx(sensing_time(cfg, d, 0, u)).margin(1e-9));
  }

  /* squared distances and SNRs are the exact ones */
  for (int t = 0; t < d.T; ++t) {
    const std::size_t i = d.kut(0, 3, t);
    CHECK(st.alpha[i] == Catch::Approx(bs_dist2(cfg, d.traj_x[i], d.traj_y[i])).epsilon(1e-12));
    const double gamma = snr_gain(cfg) * d.p_cm[i] / st.alpha[i];
    CHECK(st.gamma[i] == Catch::Approx(gamma).epsilon(1e-12));
    CHECK(st.z[i] == Catch::Approx(cfg.bandwidth_uav * log2_1p(gamma)).epsilon(1e-12));
  }

  /* download time at the final slot */
  CHECK(st.theta[0] == Catch::Approx(download_time(cfg, d, 0, 0)).epsilon(1e-9));
}

TEST_CASE("surrogate floors keep state strictly positive") {
  ScenarioConfig cfg = default_scenario();
  DecisionVector d = initial_feasible_point(cfg);
  /* zero out one UAV's schedule; its iota/psi entries must stay positive */
  for (int c = 0; c < d.C; ++c) d.x(0, c, 1) = 0.0;
  const SurrogateState st = init_surrogate_state(cfg, d);
  for (int c = 0; c < d.C; ++c) {
    const std::size_t i = 1 * static_cast<std::size_t>(d.C) + static_cast<std::size_t>(c);
    CHECK(st.psi[i] > 0.0);
    CHECK(st.iota[i] > 0.0);
  }
}
