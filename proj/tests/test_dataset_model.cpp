#include <catch2/catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>

#include "uavfml/fml/dataset.hpp"
#include "uavfml/fml/model.hpp"

using namespace uavfml;

namespace {

ScenarioConfig data_cfg() {
  ScenarioConfig cfg = default_scenario();
  cfg.num_uavs = 4;
  cfg.num_modalities = 2;
  cfg.samples_per_uav.assign(4, 60.0);
  cfg.cycles_per_sample.assign(4, 1.0e6);
  cfg.fl.probe_set_size = 36;
  return cfg;
}

}  // namespace

TEST_CASE("synthetic corpus has the right shapes and ranges") {
  const ScenarioConfig cfg = data_cfg();
  const FmlData data = synth_multimodal_dataset(cfg, 3, true);
  REQUIRE(data.modalities.size() == 2);
  REQUIRE(data.uav_cluster.size() == 4);
  CHECK(data.uav_cluster[0] == 0);
  CHECK(data.uav_cluster[3] == 1);
  for (const auto& md : data.modalities) {
    REQUIRE(md.uav_X.size() == 2);
    for (const auto& X : md.uav_X) {
      CHECK(X.rows() == 60);
      CHECK(X.cols() == kInputDim);
    }
    CHECK(md.probe_X.rows() == cfg.fl.probe_set_size);
    CHECK(md.test_X.rows() == kTestSetSize);
  }
  for (int label : data.probe_y) {
    CHECK(label >= 0);
    CHECK(label < cfg.fl.num_classes);
  }
  /* probe and test labels are balanced */
  std::vector<int> counts(static_cast<std::size_t>(cfg.fl.num_classes), 0);
  for (int label : data.test_y) counts[static_cast<std::size_t>(label)]++;
  for (int c : counts) CHECK(c == kTestSetSize / cfg.fl.num_classes);
}

TEST_CASE("generation is deterministic per seed and differs across seeds") {
  const ScenarioConfig cfg = data_cfg();
  const FmlData a = synth_multimodal_dataset(cfg, 9, true);
  const FmlData b = synth_multimodal_dataset(cfg, 9, true);
  const FmlData c = synth_multimodal_dataset(cfg, 10, true);
  CHECK((a.modalities[0].uav_X[0] - b.modalities[0].uav_X[0]).norm() == 0.0);
  CHECK(a.probe_y == b.probe_y);
  CHECK((a.modalities[0].uav_X[0] - c.modalities[0].uav_X[0]).norm() != 0.0);
}

TEST_CASE("label streams are independent of the chosen views") {
  const ScenarioConfig mm_cfg = data_cfg();
  const FmlData mm = synth_multimodal_dataset(mm_cfg, 4, true);
  ScenarioConfig uni = data_cfg();
  uni.num_modalities = 1;
  const FmlData u0 = synth_multimodal_dataset(uni, 4, true, {0});
  const FmlData u1 = synth_multimodal_dataset(uni, 4, true, {1});
  /* same UAV index sees the same labels regardless of its view */
  CHECK(mm.modalities[0].uav_y[0] == u0.modalities[0].uav_y[0]);
  CHECK(u0.modalities[0].uav_y[1] == u1.modalities[0].uav_y[1]);
  /* but different features on different views */
  CHECK((u0.modalities[0].uav_X[1] - u1.modalities[0].uav_X[1]).norm() != 0.0);
}

TEST_CASE("dirichlet split skews labels while iid stays near uniform") {
  ScenarioConfig cfg = data_cfg();
  cfg.samples_per_uav.assign(4, 600.0);
  const FmlData iid = synth_multimodal_dataset(cfg, 8, true);
  const FmlData skew = synth_multimodal_dataset(cfg, 8, false);
  auto max_share = [&](const std::vector<int>& y) {
    std::vector<int> n(static_cast<std::size_t>(cfg.fl.num_classes), 0);
    for (int v : y) n[static_cast<std::size_t>(v)]++;
    int mx = 0;
    for (int v : n) mx = std::max(mx, v);
    return static_cast<double>(mx) / static_cast<double>(y.size());
  };
  CHECK(max_share(iid.modalities[0].uav_y[0]) < 0.3);
  /* alpha = 0.3 concentrates labels hard */
  CHECK(max_share(skew.modalities[0].uav_y[0]) > 0.3);
}

TEST_CASE("views outside the synthetic family are rejected") {
  const ScenarioConfig cfg = data_cfg();
  CHECK_THROWS_AS(synth_multimodal_dataset(cfg, 1, true, {0, 2}), ConfigError);
  CHECK_THROWS_AS(synth_multimodal_dataset(cfg, 1, true, {0}), ConfigError);
}

TEST_CASE("csv datasets load, normalize and split deterministically") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "uavfml_ds.csv").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "f1,f2,label\n";
    for (int i = 0; i < 30; ++i) {
      f << i << "," << (i % 2 ? 10.0 : -10.0) << "," << i % 3 << "\n";
    }
  }
  const CsvDataset ds = load_csv_dataset(path, {"f1", "f2"}, "label");
  CHECK(ds.train_X.rows() + ds.test_X.rows() == 30);
  CHECK(ds.test_X.rows() == 9); /* ceil(0.3 * 30) */
  CHECK(ds.train_X.cols() == 2);
  /* z-scored features: zero mean, unit variance over the full table */
  Eigen::MatrixXd all(30, 2);
  all << ds.train_X, ds.test_X;
  CHECK(all.col(0).mean() == Catch::Approx(0.0).margin(1e-9));
  CHECK((all.col(0).array().square().sum() / 30.0) == Catch::Approx(1.0).epsilon(1e-9));

  const CsvDataset again = load_csv_dataset(path, {"f1", "f2"}, "label");
  CHECK((ds.train_X - again.train_X).norm() == 0.0);
  CHECK(ds.train_y == again.train_y);
}

TEST_CASE("tiny csv split puts two rows in train, one in test") {
  const std::string path =
      (std::filesystem::temp_directory_path() / "uavfml_tiny.csv").string();
  {
    std::ofstream f(path, std::ios::binary);
    f << "a,label\n1,0\n2,1\n3,0\n";
  }
  const CsvDataset ds = load_csv_dataset(path, {"a"}, "label");
  CHECK(ds.train_X.rows() == 2);
  CHECK(ds.test_X.rows() == 1);
}

TEST_CASE("csv dataset errors carry their cause") {
  const auto dir = std::filesystem::temp_directory_path();
  const std::string missing_col = (dir / "uavfml_cols.csv").string();
  {
    std::ofstream f(missing_col, std::ios::binary);
    f << "a,label\n1,0\n";
  }
  CHECK_THROWS_AS(load_csv_dataset(missing_col, {"nope"}, "label"), DataError);
  CHECK_THROWS_AS(load_csv_dataset(missing_col, {"a"}, "nope"), DataError);

  const std::string malformed = (dir / "uavfml_malformed.csv").string();
  {
    std::ofstream f(malformed, std::ios::binary);
    f << "a,label\nfish,0\n";
  }
  CHECK_THROWS_AS(load_csv_dataset(malformed, {"a"}, "label"), DataError);

  const std::string empty = (dir / "uavfml_empty.csv").string();
  {
    std::ofstream f(empty, std::ios::binary);
    f << "a,label\n";
  }
  CHECK_THROWS_AS(load_csv_dataset(empty, {"a"}, "label"), DataError);
}

TEST_CASE("encoder forward has documented shapes and bounded hidden units") {
  FlConfig fl;
  fl.hidden_dim = 8;
  fl.embed_dim = 3;
  Rng rng(5, 2);
  const EncoderParams p = init_encoder(fl, 4, rng);
  Eigen::MatrixXd X = Eigen::MatrixXd::Random(10, 4);
  const EncoderCache c = encoder_forward(p, X);
  CHECK(c.H1.rows() == 10);
  CHECK(c.H1.cols() == 8);
  CHECK(c.Z.rows() == 10);
  CHECK(c.Z.cols() == 3);
  CHECK(c.H1.array().abs().maxCoeff() <= 1.0);
  CHECK_THROWS_AS(encoder_forward(p, Eigen::MatrixXd::Random(2, 5)), DataError);
}

TEST_CASE("flat parameter views round-trip") {
  FlConfig fl;
  Rng rng(5, 3);
  EncoderParams p = init_encoder(fl, kInputDim, rng);
  const Eigen::VectorXd flat = p.to_flat();
  EncoderParams q = p;
  q.from_flat(flat);
  CHECK((q.W1 - p.W1).norm() == 0.0);
  CHECK((q.b2 - p.b2).norm() == 0.0);
  CHECK_THROWS_AS(q.from_flat(Eigen::VectorXd::Zero(3)), DataError);
}

TEST_CASE("softmax rows are proper distributions") {
  Eigen::MatrixXd logits(2, 3);
  logits << 1.0, 2.0, 3.0, -1000.0, 0.0, 1000.0;
  const Eigen::MatrixXd P = softmax_rows(logits);
  for (int i = 0; i < 2; ++i) {
    CHECK(P.row(i).sum() == Catch::Approx(1.0).epsilon(1e-12));
    CHECK(P.row(i).minCoeff() >= 0.0);
  }
  CHECK(P(1, 2) == Catch::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("cross entropy of the true one-hot is zero and uniform is log C") {
  Eigen::MatrixXd P(2, 4);
  P << 1.0, 0.0, 0.0, 0.0, 0.25, 0.25, 0.25, 0.25;
  const std::vector<int> y = {0, 2};
  const double expected = (0.0 + std::log(4.0)) / 2.0;
  CHECK(cross_entropy(P, y) == Catch::Approx(expected).epsilon(1e-12));
}

TEST_CASE("xavier init spans shrink with width and biases start at zero") {
  FlConfig fl;
  fl.hidden_dim = 64;
  fl.embed_dim = 16;
  Rng rng(5, 4);
  const EncoderParams p = init_encoder(fl, 9, rng);
  CHECK(p.b1.isZero());
  CHECK(p.b2.isZero());
  const double span1 = xavier_span(9, 64);
  CHECK(p.W1.array().abs().maxCoeff() <= span1);
  CHECK(p.W1.array().abs().maxCoeff() > span1 * 0.5);
}
