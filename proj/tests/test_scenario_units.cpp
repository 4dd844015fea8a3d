#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "uavfml/csv.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/scenario.hpp"
#include "uavfml/units.hpp"

using namespace uavfml;

TEST_CASE("unit conversions round-trip") {
  CHECK(dbm_to_watts(30.0) == Catch::Approx(1.0));
  CHECK(dbm_to_watts(0.0) == Catch::Approx(1.0e-3));
  CHECK(watts_to_dbm(dbm_to_watts(25.0)) == Catch::Approx(25.0));
  CHECK(db_to_linear(10.0) == Catch::Approx(10.0));
  CHECK(db_to_linear(0.0) == Catch::Approx(1.0));
}

TEST_CASE("default scenario is valid and matches the headline parameters") {
  const ScenarioConfig cfg = default_scenario();
  const auto report = validate(cfg);
  INFO(report.summary());
  CHECK(report.ok());

  CHECK(cfg.num_uavs == 20);
  CHECK(cfg.num_targets == 10);
  CHECK(cfg.bandwidth_uav == Catch::Approx(2.0e7));
  /* 25 dBm and 35 dBm caps in watts */
  CHECK(cfg.p_se_max == Catch::Approx(dbm_to_watts(25.0)));
  CHECK(cfg.p_cm_max == Catch::Approx(dbm_to_watts(25.0)));
  CHECK(cfg.p_bs_max == Catch::Approx(dbm_to_watts(35.0)));
  CHECK(cfg.uavs_per_cluster() == 10);
  CHECK(cfg.cluster_of(0) == 0);
  CHECK(cfg.cluster_of(cfg.num_uavs - 1) == cfg.num_modalities - 1);
  CHECK(cfg.slot_duration() == Catch::Approx(cfg.flight_time / cfg.time_slots));
}

TEST_CASE("validation flags broken configs") {
  ScenarioConfig cfg = default_scenario();
  cfg.num_uavs = 0;
  CHECK_FALSE(validate(cfg).ok());

  cfg = default_scenario();
  cfg.noise_power = -1.0;
  CHECK_FALSE(validate(cfg).ok());

  cfg = default_scenario();
  cfg.samples_per_uav[3] = 0.0;
  CHECK_FALSE(validate(cfg).ok());

  cfg = default_scenario();
  cfg.radar_duty = 1.5;
  CHECK_FALSE(validate(cfg).ok());
}

TEST_CASE("scenario json round-trips") {
  const ScenarioConfig cfg = default_scenario();
  const nlohmann::json j = scenario_to_json(cfg);
  const ScenarioConfig back = load_scenario_json(j);
  CHECK(back.num_uavs == cfg.num_uavs);
  CHECK(back.p_se_max == cfg.p_se_max);
  CHECK(back.samples_per_uav == cfg.samples_per_uav);
  CHECK(back.target_positions.size() == cfg.target_positions.size());
  CHECK(back.fl.batch_size == cfg.fl.batch_size);
}

TEST_CASE("unknown config keys are rejected") {
  nlohmann::json j;
  j["num_uavs"] = 4;
  j["definitely_not_a_key"] = 1;
  CHECK_THROWS_AS(load_scenario_json(j), ConfigError);
}

TEST_CASE("perturbed scenarios stay valid and differ per seed") {
  const ScenarioConfig base = default_scenario();
  const ScenarioConfig a = perturbed_scenario(base, 7);
  const ScenarioConfig b = perturbed_scenario(base, 8);
  CHECK(validate(a).ok());
  CHECK(validate(b).ok());
  CHECK(a.samples_per_uav != b.samples_per_uav);
  /* identical seed reproduces identical scenario */
  const ScenarioConfig a2 = perturbed_scenario(base, 7);
  CHECK(a.samples_per_uav == a2.samples_per_uav);
  CHECK(a.embed_payload == a2.embed_payload);
}

TEST_CASE("rng streams are deterministic and independent") {
  Rng a(42, 1), a2(42, 1), b(42, 2);
  CHECK(a.next_u64() == a2.next_u64());
  CHECK(a.next_u64() == a2.next_u64());
  Rng c(42, 1), d(42, 1);
  CHECK(c.next_double() == d.next_double());
  (void)b;
}

TEST_CASE("rng uniform and dirichlet behave") {
  Rng r(1, 9);
  for (int i = 0; i < 1000; ++i) {
    const double v = r.uniform(2.0, 3.0);
    CHECK(v >= 2.0);
    CHECK(v <= 3.0);
  }
  const auto p = r.dirichlet(0.3, 6);
  double sum = 0.0;
  for (double v : p) {
    CHECK(v >= 0.0);
    sum += v;
  }
  CHECK(sum == Catch::Approx(1.0));
}

TEST_CASE("csv reader parses and rejects malformed input") {
  const std::string dir = std::filesystem::temp_directory_path().string();
  const std::string good = dir + "/uavfml_good.csv";
  {
    std::ofstream f(good, std::ios::binary);
    f << "a,b,c\n1,2.5,3\n4,5,6\n";
  }
  const CsvTable t = read_csv(good);
  REQUIRE(t.header.size() == 3);
  REQUIRE(t.rows.size() == 2);
  CHECK(parse_double_cell(t.rows[0][1], 2, good) == Catch::Approx(2.5));

  const std::string bad = dir + "/uavfml_bad.csv";
  {
    std::ofstream f(bad, std::ios::binary);
    f << "a,b\n1\n";
  }
  CHECK_THROWS_AS(read_csv(bad), DataError);
  CHECK_THROWS_AS(parse_double_cell("not-a-number", 1, "x"), DataError);
  CHECK_THROWS_AS(read_csv(dir + "/definitely_missing.csv"), DataError);
}

TEST_CASE("quoted csv cells round-trip") {
  const auto cells = split_csv_line("a,\"b,c\",\"d\"\"e\"");
  REQUIRE(cells.size() == 3);
  CHECK(cells[1] == "b,c");
  CHECK(cells[2] == "d\"e");
}
