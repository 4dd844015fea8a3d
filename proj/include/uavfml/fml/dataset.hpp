#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>
#include <vector>

#include "uavfml/csv.hpp"
#include "uavfml/errors.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/scenario.hpp"

namespace uavfml {

/* Synthetic features live in a fixed 9-dim space: dims 0-2 encode class mod 3
   (view 0), dims 3-5 encode class div 3 (view 1), dims 6-8 are pure noise.
   Either view alone leaves classes aliased; both together separate all. */
inline constexpr int kInputDim = 9;
inline constexpr int kTestSetSize = 600;
inline constexpr double kClassSignal = 2.0;
inline constexpr double kFeatureNoise = 0.3;

struct ModalityDataset {
  int modality = 0; /* view id */
  std::vector<Eigen::MatrixXd> uav_X; /* one block per UAV of this cluster */
  std::vector<std::vector<int>> uav_y;
  Eigen::MatrixXd probe_X; /* shared reference set, same row order across views */
  Eigen::MatrixXd test_X;
};

struct FmlData {
  std::vector<ModalityDataset> modalities;
  std::vector<int> probe_y, test_y;
  std::vector<int> uav_cluster; /* cluster id per global UAV */
  std::vector<int> uav_local;   /* index within its cluster's partition list */
};

namespace detail_data {

inline void class_mean(int label, int view, double* out) {
  for (int i = 0; i < kInputDim; ++i) out[i] = 0.0;
  if (view == 0) {
    out[label % 3] = kClassSignal;
  } else {
    out[3 + (label / 3) % 3] = kClassSignal;
  }
}

inline Eigen::MatrixXd features_for(const std::vector<int>& labels, int view, Rng& rng) {
  Eigen::MatrixXd X(static_cast<Eigen::Index>(labels.size()), kInputDim);
  double mu[kInputDim];
  for (std::size_t i = 0; i < labels.size(); ++i) {
    class_mean(labels[i], view, mu);
    for (int j = 0; j < kInputDim; ++j) {
      X(static_cast<Eigen::Index>(i), j) = mu[j] + kFeatureNoise * rng.normal();
    }
  }
  return X;
}

/* balanced labels in shuffled round-robin order */
inline std::vector<int> balanced_labels(int n, int classes, Rng& rng) {
  std::vector<int> y(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = i % classes;
  rng.shuffle(y);
  return y;
}

}  // namespace detail_data

/*
 * Build the full corpus: per-UAV local sets (IID uniform labels, or non-IID
 * via per-UAV Dirichlet class proportions), plus the shared probe and test
 * sets carrying every view. `views` picks the view per modality index;
 * defaults to identity. Label draws never depend on the chosen views, so a
 * single-view run sees the same events as the full run.
 */
inline FmlData synth_multimodal_dataset(const ScenarioConfig& cfg, std::uint64_t seed,
                                        bool iid, std::vector<int> views = {}) {
  const int M = cfg.num_modalities;
  const int U = cfg.num_uavs;
  const int classes = cfg.fl.num_classes;
  if (views.empty()) {
    views.resize(static_cast<std::size_t>(M));
    std::iota(views.begin(), views.end(), 0);
  }
  if (static_cast<int>(views.size()) != M) throw ConfigError("one view per modality required");
  for (int v : views) {
    if (v < 0 || v > 1) throw ConfigError("synthetic views are 0 or 1");
  }
  if (cfg.samples_per_uav.size() < static_cast<std::size_t>(U)) {
    throw ConfigError("samples_per_uav must cover every UAV");
  }

  FmlData data;
  data.modalities.resize(static_cast<std::size_t>(M));
  data.uav_cluster.resize(static_cast<std::size_t>(U));
  data.uav_local.resize(static_cast<std::size_t>(U));
  for (int m = 0; m < M; ++m) data.modalities[static_cast<std::size_t>(m)].modality = views[static_cast<std::size_t>(m)];

  for (int u = 0; u < U; ++u) {
    const int m = cfg.cluster_of(u);
    data.uav_cluster[static_cast<std::size_t>(u)] = m;
    auto& md = data.modalities[static_cast<std::size_t>(m)];
    data.uav_local[static_cast<std::size_t>(u)] = static_cast<int>(md.uav_y.size());

    const int n = static_cast<int>(std::lround(cfg.samples_per_uav[static_cast<std::size_t>(u)]));
    std::vector<int> y(static_cast<std::size_t>(n));
    Rng label_rng(seed, 101, static_cast<std::uint64_t>(u));
    if (iid) {
      for (int i = 0; i < n; ++i) y[static_cast<std::size_t>(i)] = static_cast<int>(label_rng.next_below(static_cast<std::uint64_t>(classes)));
    } else {
      Rng dir_rng(seed, 501, static_cast<std::uint64_t>(u));
      const std::vector<double> pi =
          dir_rng.dirichlet(cfg.fl.dirichlet_alpha, static_cast<std::size_t>(classes));
      for (int i = 0; i < n; ++i) {
        double r = label_rng.next_double();
        int c = classes - 1;
        double acc = 0.0;
        for (int j = 0; j < classes; ++j) {
          acc += pi[static_cast<std::size_t>(j)];
          if (r < acc) {
            c = j;
            break;
          }
        }
        y[static_cast<std::size_t>(i)] = c;
      }
    }
    Rng feat_rng(seed, 201, static_cast<std::uint64_t>(u),
                 static_cast<std::uint64_t>(views[static_cast<std::size_t>(m)]));
    md.uav_X.push_back(detail_data::features_for(y, views[static_cast<std::size_t>(m)], feat_rng));
    md.uav_y.push_back(std::move(y));
  }

  Rng probe_rng(seed, 301);
  data.probe_y = detail_data::balanced_labels(cfg.fl.probe_set_size, classes, probe_rng);
  Rng test_rng(seed, 302);
  data.test_y = detail_data::balanced_labels(kTestSetSize, classes, test_rng);
  for (int m = 0; m < M; ++m) {
    const int v = views[static_cast<std::size_t>(m)];
    Rng pr(seed, 401, static_cast<std::uint64_t>(v));
    Rng tr(seed, 402, static_cast<std::uint64_t>(v));
    data.modalities[static_cast<std::size_t>(m)].probe_X =
        detail_data::features_for(data.probe_y, v, pr);
    data.modalities[static_cast<std::size_t>(m)].test_X =
        detail_data::features_for(data.test_y, v, tr);
  }
  return data;
}

/*
 * CSV ingestion: numeric columns by header name, one label column. Columns
 * are z-scored (constant columns become zeros), rows split 70/30 by ranking
 * a per-row hash so the train share is exactly ceil(0.7 N).
 */
struct CsvDataset {
  Eigen::MatrixXd train_X, test_X;
  std::vector<int> train_y, test_y;
};

inline CsvDataset load_csv_dataset(const std::string& path,
                                   const std::vector<std::string>& feature_columns,
                                   const std::string& label_column) {
  const CsvTable table = read_csv(path);
  auto col_index = [&](const std::string& name) {
    for (std::size_t j = 0; j < table.header.size(); ++j) {
      if (table.header[j] == name) return static_cast<int>(j);
    }
    throw DataError("unknown column '" + name + "' in " + path);
  };
  const int label_col = col_index(label_column);
  std::vector<int> cols;
  cols.reserve(feature_columns.size());
  for (const auto& name : feature_columns) cols.push_back(col_index(name));
  if (cols.empty()) throw DataError("no feature columns requested");

  const std::size_t n = table.rows.size();
  if (n == 0) throw DataError("empty dataset in " + path);
  Eigen::MatrixXd X(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(cols.size()));
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = table.rows[i];
    for (std::size_t j = 0; j < cols.size(); ++j) {
      X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          parse_double_cell(row[static_cast<std::size_t>(cols[j])], i + 2, path);
    }
    y[i] = static_cast<int>(
        std::lround(parse_double_cell(row[static_cast<std::size_t>(label_col)], i + 2, path)));
  }

  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const double mean = X.col(j).mean();
    const double var = (X.col(j).array() - mean).square().sum() / static_cast<double>(n);
    const double sd = std::sqrt(var);
    if (sd > 0.0) {
      X.col(j) = (X.col(j).array() - mean) / sd;
    } else {
      X.col(j).setZero();
    }
  }

  /* rank rows by hash; smallest ceil(0.7 N) hashes train */
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<std::uint64_t> h(n);
  for (std::size_t i = 0; i < n; ++i) h[i] = splitmix64(0x5eed5eedULL + i);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
    return h[a] != h[b] ? h[a] < h[b] : a < b;
  });
  const std::size_t n_train = n - (3 * n + 9) / 10; /* test share is ceil(0.3 n) */

  CsvDataset out;
  out.train_X.resize(static_cast<Eigen::Index>(n_train), X.cols());
  out.test_X.resize(static_cast<Eigen::Index>(n - n_train), X.cols());
  for (std::size_t r = 0; r < n; ++r) {
    const std::size_t src = order[r];
    if (r < n_train) {
      out.train_X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(src));
      out.train_y.push_back(y[src]);
    } else {
      out.test_X.row(static_cast<Eigen::Index>(r - n_train)) =
          X.row(static_cast<Eigen::Index>(src));
      out.test_y.push_back(y[src]);
    }
  }
  return out;
}

}  // namespace uavfml
