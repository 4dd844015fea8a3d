#pragma once

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "uavfml/fml/dataset.hpp"
#include "uavfml/fml/model.hpp"

namespace uavfml {

/* mean over the per-UAV embedding batches of one modality */
inline Eigen::MatrixXd aggregate_embeddings(const std::vector<Eigen::MatrixXd>& per_uav) {
  if (per_uav.empty()) throw DataError("no embeddings to aggregate");
  Eigen::MatrixXd acc = per_uav.front();
  for (std::size_t i = 1; i < per_uav.size(); ++i) {
    if (per_uav[i].rows() != acc.rows() || per_uav[i].cols() != acc.cols()) {
      throw DataError("embedding shape mismatch in aggregation");
    }
    acc += per_uav[i];
  }
  return acc / static_cast<double>(per_uav.size());
}

/* side-by-side concatenation in modality order */
inline Eigen::MatrixXd concat_embeddings(const std::vector<Eigen::MatrixXd>& h_m) {
  if (h_m.empty()) throw DataError("nothing to concatenate");
  Eigen::Index cols = 0;
  for (const auto& h : h_m) {
    if (h.rows() != h_m.front().rows()) throw DataError("embedding row mismatch in concat");
    cols += h.cols();
  }
  Eigen::MatrixXd out(h_m.front().rows(), cols);
  Eigen::Index o = 0;
  for (const auto& h : h_m) {
    out.middleCols(o, h.cols()) = h;
    o += h.cols();
  }
  return out;
}

/* data-size weighted average of encoder parameters over participating UAVs */
inline EncoderParams aggregate_models(const std::vector<EncoderParams>& params,
                                      const std::vector<int>& participating,
                                      const std::vector<double>& sizes) {
  if (params.empty() || params.size() != participating.size() || params.size() != sizes.size()) {
    throw DataError("model aggregation input shape mismatch");
  }
  double total = 0.0;
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(params.front().flat_size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (!participating[i]) continue;
    if (params[i].flat_size() != acc.size()) throw DataError("model flat shape mismatch");
    acc += sizes[i] * params[i].to_flat();
    total += sizes[i];
  }
  if (total <= 0.0) throw DataError("no participating data in modality aggregation");
  EncoderParams out = params.front();
  out.from_flat(acc / total);
  return out;
}

inline Eigen::MatrixXd extract_high_level_features(const EncoderParams& w_m,
                                                   const Eigen::MatrixXd& probe_X) {
  if (probe_X.rows() == 0) throw DataError("empty probe set");
  return encoder_forward(w_m, probe_X).Z;
}

/* alpha_m = softmax over modalities of wa_m . mean(z_m) + ba_m */
inline Eigen::VectorXd attention_scores(const std::vector<Eigen::MatrixXd>& z_m,
                                        const ServerParams& server) {
  if (z_m.size() != server.heads.size()) throw DataError("one attention head per modality");
  Eigen::VectorXd s(static_cast<Eigen::Index>(z_m.size()));
  for (std::size_t m = 0; m < z_m.size(); ++m) {
    const Eigen::VectorXd mean = z_m[m].colwise().mean();
    if (mean.size() != server.heads[m].wa.size()) throw DataError("attention head shape mismatch");
    s(static_cast<Eigen::Index>(m)) = server.heads[m].wa.dot(mean) + server.heads[m].ba;
  }
  const double mx = s.maxCoeff();
  Eigen::ArrayXd e = (s.array() - mx).exp();
  return (e / e.sum()).matrix();
}

/* attention-weighted average of the per-modality encoder parameters */
inline EncoderParams fuse_global(const std::vector<EncoderParams>& w_m,
                                 const Eigen::VectorXd& alpha) {
  if (w_m.empty() || static_cast<Eigen::Index>(w_m.size()) != alpha.size()) {
    throw DataError("fusion needs one weight per modality");
  }
  Eigen::VectorXd acc = Eigen::VectorXd::Zero(w_m.front().flat_size());
  for (std::size_t m = 0; m < w_m.size(); ++m) {
    if (w_m[m].flat_size() != acc.size()) {
      throw DataError("fusion requires equal encoder shapes across modalities");
    }
    acc += alpha(static_cast<Eigen::Index>(m)) * w_m[m].to_flat();
  }
  EncoderParams out = w_m.front();
  out.from_flat(acc);
  return out;
}

inline double global_loss(const std::vector<double>& losses, const std::vector<double>& sizes) {
  if (losses.empty() || losses.size() != sizes.size()) throw DataError("loss/size mismatch");
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < losses.size(); ++i) {
    num += losses[i] * sizes[i];
    den += sizes[i];
  }
  if (den <= 0.0) throw DataError("no data behind global loss");
  return num / den;
}

/* frozen server-side pieces a UAV trains against mid-round */
struct LocalContext {
  const ServerParams* server = nullptr;
  Eigen::VectorXd alpha;                    /* round-start gates */
  std::vector<Eigen::VectorXd> fills;       /* round-start mean embedding per modality */
  int modality = 0;
};

struct LocalResult {
  std::vector<double> losses;    /* per local step */
  Eigen::VectorXd first_grad;    /* flat encoder gradient at round start */
  Eigen::VectorXd full_grad;     /* flat full-partition gradient at round start */
};

namespace detail_fml {

/* gated decoder input for rows of one modality; other blocks are constant fills */
inline Eigen::MatrixXd gated_input(const Eigen::MatrixXd& Z, const LocalContext& ctx) {
  const int M = static_cast<int>(ctx.fills.size());
  const Eigen::Index e = Z.cols();
  Eigen::MatrixXd D(Z.rows(), static_cast<Eigen::Index>(M) * e);
  for (int m = 0; m < M; ++m) {
    const double a = ctx.alpha(m);
    if (m == ctx.modality) {
      D.middleCols(static_cast<Eigen::Index>(m) * e, e) = a * Z;
    } else {
      D.middleCols(static_cast<Eigen::Index>(m) * e, e) =
          (a * ctx.fills[static_cast<std::size_t>(m)].transpose()).replicate(Z.rows(), 1);
    }
  }
  return D;
}

inline Eigen::VectorXd flat_grad(const EncoderGrad& g) {
  Eigen::VectorXd v(g.W1.size() + g.b1.size() + g.W2.size() + g.b2.size());
  Eigen::Index o = 0;
  v.segment(o, g.W1.size()) = Eigen::Map<const Eigen::VectorXd>(g.W1.data(), g.W1.size());
  o += g.W1.size();
  v.segment(o, g.b1.size()) = g.b1;
  o += g.b1.size();
  v.segment(o, g.W2.size()) = Eigen::Map<const Eigen::VectorXd>(g.W2.data(), g.W2.size());
  o += g.W2.size();
  v.segment(o, g.b2.size()) = g.b2;
  return v;
}

}  // namespace detail_fml

struct LocalGrad {
  double loss = 0.0;
  EncoderGrad grad;
};

/* cross-entropy and encoder gradient of one UAV's gated forward pass */
inline LocalGrad local_loss_grad(const EncoderParams& p, const Eigen::MatrixXd& X,
                                 const std::vector<int>& y, const LocalContext& ctx) {
  const EncoderCache c = encoder_forward(p, X);
  const Eigen::MatrixXd D = detail_fml::gated_input(c.Z, ctx);
  const Eigen::MatrixXd P = decoder_forward(*ctx.server, D);
  const Eigen::MatrixXd G = ce_logit_grad(P, y);
  const Eigen::Index e = c.Z.cols();
  const Eigen::MatrixXd dZ =
      ctx.alpha(ctx.modality) *
      (G * ctx.server->Wd.middleCols(static_cast<Eigen::Index>(ctx.modality) * e, e));
  return {cross_entropy(P, y), encoder_backward(p, X, c, dZ)};
}

/* J minibatch SGD steps against the frozen round-start server context */
inline LocalResult local_sgd_round(EncoderParams& params, const Eigen::MatrixXd& X,
                                   const std::vector<int>& y, const LocalContext& ctx, int J,
                                   double eta, int batch, Rng& rng) {
  if (J < 1) throw ConfigError("local iteration count must be >= 1");
  const int n = static_cast<int>(y.size());
  if (batch > n) throw ConfigError("batch larger than local dataset");

  LocalResult res;
  res.full_grad = detail_fml::flat_grad(local_loss_grad(params, X, y, ctx).grad);

  std::vector<int> idx(static_cast<std::size_t>(n));
  std::iota(idx.begin(), idx.end(), 0);
  Eigen::MatrixXd bx(batch, X.cols());
  std::vector<int> by(static_cast<std::size_t>(batch));
  for (int step = 0; step < J; ++step) {
    /* partial Fisher-Yates draw of `batch` distinct rows */
    for (int i = 0; i < batch; ++i) {
      const int j = i + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - i)));
      std::swap(idx[static_cast<std::size_t>(i)], idx[static_cast<std::size_t>(j)]);
      bx.row(i) = X.row(idx[static_cast<std::size_t>(i)]);
      by[static_cast<std::size_t>(i)] = y[static_cast<std::size_t>(idx[static_cast<std::size_t>(i)])];
    }
    const LocalGrad lg = local_loss_grad(params, bx, by, ctx);
    if (step == 0) res.first_grad = detail_fml::flat_grad(lg.grad);
    res.losses.push_back(lg.loss);
    sgd_step(params, lg.grad, eta);
  }
  return res;
}

/* top-1 accuracy through encoders -> gated concat -> decoder */
inline double evaluate_accuracy(const ServerParams& server,
                                const std::vector<EncoderParams>& encoders,
                                const std::vector<Eigen::MatrixXd>& test_X,
                                const std::vector<int>& test_y, const Eigen::VectorXd& alpha) {
  if (encoders.size() != test_X.size()) throw DataError("one test view per encoder");
  std::vector<Eigen::MatrixXd> gated(encoders.size());
  for (std::size_t m = 0; m < encoders.size(); ++m) {
    gated[m] = alpha(static_cast<Eigen::Index>(m)) *
               encoder_forward(encoders[m], test_X[m]).Z;
  }
  const Eigen::MatrixXd P = decoder_forward(server, concat_embeddings(gated));
  if (P.rows() == 0) return 0.0;
  int hits = 0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    Eigen::Index arg = 0;
    P.row(i).maxCoeff(&arg);
    hits += arg == test_y[static_cast<std::size_t>(i)];
  }
  return static_cast<double>(hits) / static_cast<double>(P.rows());
}

struct ServerGrad {
  double loss = 0.0;
  Eigen::MatrixXd dWd;
  Eigen::VectorXd dbd;
  std::vector<Eigen::VectorXd> dwa;
  std::vector<double> dba;
};

/*
 * Loss and gradients of the server objective. The decoder sees the uploaded
 * mean embeddings h_m gated by alpha; alpha's scores come from the
 * aggregated-model probe features z_m, which is what routes cross-entropy
 * gradient into the scorer heads.
 */
inline ServerGrad server_loss_grad(const ServerParams& server,
                                   const std::vector<Eigen::MatrixXd>& h_m,
                                   const std::vector<Eigen::MatrixXd>& z_m,
                                   const std::vector<int>& probe_y) {
  const int M = static_cast<int>(h_m.size());
  const Eigen::Index e = h_m.front().cols();
  const Eigen::VectorXd alpha = attention_scores(z_m, server);

  std::vector<Eigen::MatrixXd> gated(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) gated[static_cast<std::size_t>(m)] = alpha(m) * h_m[static_cast<std::size_t>(m)];
  const Eigen::MatrixXd D = concat_embeddings(gated);
  const Eigen::MatrixXd P = decoder_forward(server, D);

  ServerGrad out;
  out.loss = cross_entropy(P, probe_y);
  const Eigen::MatrixXd G = ce_logit_grad(P, probe_y);
  out.dWd = G.transpose() * D;
  out.dbd = G.colwise().sum();
  const Eigen::MatrixXd dD = G * server.Wd;

  Eigen::VectorXd dalpha(M);
  for (int m = 0; m < M; ++m) {
    dalpha(m) = (dD.middleCols(static_cast<Eigen::Index>(m) * e, e).array() *
                 h_m[static_cast<std::size_t>(m)].array())
                    .sum();
  }
  const double inner = alpha.dot(dalpha);
  out.dwa.resize(static_cast<std::size_t>(M));
  out.dba.resize(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    const double ds = alpha(m) * (dalpha(m) - inner);
    out.dwa[static_cast<std::size_t>(m)] =
        ds * z_m[static_cast<std::size_t>(m)].colwise().mean().transpose();
    out.dba[static_cast<std::size_t>(m)] = ds;
  }
  return out;
}

/* J' SGD steps on decoder + attention heads against fixed uploads */
inline std::vector<double> server_train(ServerParams& server,
                                        const std::vector<Eigen::MatrixXd>& h_m,
                                        const std::vector<Eigen::MatrixXd>& z_m,
                                        const std::vector<int>& probe_y, int iters, double eta) {
  std::vector<double> losses;
  for (int it = 0; it < iters; ++it) {
    const ServerGrad g = server_loss_grad(server, h_m, z_m, probe_y);
    losses.push_back(g.loss);
    server.Wd -= eta * g.dWd;
    server.bd -= eta * g.dbd;
    for (std::size_t m = 0; m < server.heads.size(); ++m) {
      server.heads[m].wa -= eta * g.dwa[m];
      server.heads[m].ba -= eta * g.dba[m];
    }
  }
  return losses;
}

struct RoundRecord {
  double global_loss = 0.0;
  double accuracy = 0.0;
  std::vector<double> alpha;
};

struct TrainingResult {
  std::vector<RoundRecord> rounds;
  double final_accuracy = 0.0;
  /* per-round diagnostics for the convergence estimators */
  std::vector<std::vector<Eigen::VectorXd>> grad_snapshots; /* one group per (round, cluster) */
  std::vector<int> snapshot_cluster;                        /* cluster id per group */
  std::vector<double> empirical_grad_sq; /* per round: sum_m ||mean_u full_grad||^2 */
  std::vector<double> sigma_samples;     /* ||g_minibatch - g_full||^2 draws */
  std::vector<Eigen::VectorXd> round_params; /* concat of modality flats, round start */
  std::vector<Eigen::VectorXd> round_grads;  /* concat of per-cluster mean full grads */
  std::vector<EncoderParams> encoders;
  ServerParams server;
  EncoderParams fused;
};

inline TrainingResult run_federated_training(const ScenarioConfig& cfg, const FmlData& data,
                                             std::uint64_t seed) {
  const int M = cfg.num_modalities;
  const int U = cfg.num_uavs;
  const FlConfig& fl = cfg.fl;

  TrainingResult out;
  std::vector<EncoderParams> w(static_cast<std::size_t>(M));
  for (int m = 0; m < M; ++m) {
    Rng r(seed, 11, static_cast<std::uint64_t>(m));
    w[static_cast<std::size_t>(m)] = init_encoder(fl, kInputDim, r);
  }
  Rng sr(seed, 12);
  ServerParams server = init_server(fl, M, sr);

  for (int k = 0; k < cfg.num_rounds; ++k) {
    /* round-start probe features, fills, and gates (broadcast state) */
    std::vector<Eigen::MatrixXd> z_start(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      z_start[static_cast<std::size_t>(m)] = extract_high_level_features(
          w[static_cast<std::size_t>(m)], data.modalities[static_cast<std::size_t>(m)].probe_X);
    }
    const Eigen::VectorXd alpha0 = attention_scores(z_start, server);
    std::vector<Eigen::VectorXd> fills(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) fills[static_cast<std::size_t>(m)] = z_start[static_cast<std::size_t>(m)].colwise().mean();

    std::vector<EncoderParams> locals(static_cast<std::size_t>(U));
    std::vector<double> local_loss(static_cast<std::size_t>(U));
    std::vector<double> sizes(static_cast<std::size_t>(U));
    std::vector<Eigen::VectorXd> first_grads(static_cast<std::size_t>(U));
    std::vector<Eigen::VectorXd> full_grads(static_cast<std::size_t>(U));

    for (int u = 0; u < U; ++u) {
      const int m = data.uav_cluster[static_cast<std::size_t>(u)];
      const int l = data.uav_local[static_cast<std::size_t>(u)];
      const auto& md = data.modalities[static_cast<std::size_t>(m)];
      LocalContext ctx{&server, alpha0, fills, m};
      locals[static_cast<std::size_t>(u)] = w[static_cast<std::size_t>(m)];
      Rng lr(seed, 21, static_cast<std::uint64_t>(k) * 1000 + static_cast<std::uint64_t>(u));
      const LocalResult res = local_sgd_round(
          locals[static_cast<std::size_t>(u)], md.uav_X[static_cast<std::size_t>(l)],
          md.uav_y[static_cast<std::size_t>(l)], ctx, cfg.local_iters, fl.learning_rate,
          std::min(fl.batch_size, static_cast<int>(md.uav_y[static_cast<std::size_t>(l)].size())),
          lr);
      local_loss[static_cast<std::size_t>(u)] = res.losses.back();
      sizes[static_cast<std::size_t>(u)] =
          static_cast<double>(md.uav_y[static_cast<std::size_t>(l)].size());
      first_grads[static_cast<std::size_t>(u)] = res.first_grad;
      full_grads[static_cast<std::size_t>(u)] = res.full_grad;
      out.sigma_samples.push_back((res.first_grad - res.full_grad).squaredNorm());
    }

    /* uploads and per-modality aggregation */
    Eigen::VectorXd params_cat(static_cast<Eigen::Index>(M) * w[0].flat_size());
    Eigen::VectorXd grads_cat(params_cat.size());
    double grad_sq = 0.0;
    std::vector<Eigen::MatrixXd> h_m(static_cast<std::size_t>(M)), z_m(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) {
      const auto& md = data.modalities[static_cast<std::size_t>(m)];
      std::vector<Eigen::MatrixXd> uploads;
      std::vector<EncoderParams> cluster_params;
      std::vector<int> flags;
      std::vector<double> cluster_sizes;
      std::vector<Eigen::VectorXd> cluster_grads;
      Eigen::VectorXd gsum = Eigen::VectorXd::Zero(w[0].flat_size());
      int count = 0;
      for (int u = 0; u < U; ++u) {
        if (data.uav_cluster[static_cast<std::size_t>(u)] != m) continue;
        uploads.push_back(
            encoder_forward(locals[static_cast<std::size_t>(u)], md.probe_X).Z);
        cluster_params.push_back(locals[static_cast<std::size_t>(u)]);
        flags.push_back(1);
        cluster_sizes.push_back(sizes[static_cast<std::size_t>(u)]);
        cluster_grads.push_back(first_grads[static_cast<std::size_t>(u)]);
        gsum += full_grads[static_cast<std::size_t>(u)];
        ++count;
      }
      out.grad_snapshots.push_back(std::move(cluster_grads));
      out.snapshot_cluster.push_back(m);
      params_cat.segment(static_cast<Eigen::Index>(m) * w[0].flat_size(), w[0].flat_size()) =
          w[static_cast<std::size_t>(m)].to_flat();
      const Eigen::VectorXd gmean = gsum / std::max(1, count);
      grads_cat.segment(static_cast<Eigen::Index>(m) * w[0].flat_size(), w[0].flat_size()) = gmean;
      grad_sq += gmean.squaredNorm();
      h_m[static_cast<std::size_t>(m)] = aggregate_embeddings(uploads);
      w[static_cast<std::size_t>(m)] = aggregate_models(cluster_params, flags, cluster_sizes);
      z_m[static_cast<std::size_t>(m)] = extract_high_level_features(
          w[static_cast<std::size_t>(m)], md.probe_X);
    }
    out.round_params.push_back(params_cat);
    out.round_grads.push_back(grads_cat);
    out.empirical_grad_sq.push_back(grad_sq);

    server_train(server, h_m, z_m, data.probe_y, cfg.server_iters, fl.learning_rate);
    const Eigen::VectorXd alpha = attention_scores(z_m, server);
    out.fused = fuse_global(w, alpha);

    RoundRecord rec;
    rec.global_loss = global_loss(local_loss, sizes);
    std::vector<Eigen::MatrixXd> test_X(static_cast<std::size_t>(M));
    for (int m = 0; m < M; ++m) test_X[static_cast<std::size_t>(m)] = data.modalities[static_cast<std::size_t>(m)].test_X;
    rec.accuracy = evaluate_accuracy(server, w, test_X, data.test_y, alpha);
    rec.alpha.assign(alpha.data(), alpha.data() + alpha.size());
    out.rounds.push_back(std::move(rec));
    out.final_accuracy = out.rounds.back().accuracy;
  }

  out.encoders = w;
  out.server = server;
  if (cfg.num_rounds == 0) out.fused = w.empty() ? EncoderParams{} : w.front();
  return out;
}

/* convenience: synthetic corpus + training in one call */
inline TrainingResult run_federated_training(const ScenarioConfig& cfg, std::uint64_t seed,
                                             bool iid, std::vector<int> views = {}) {
  const FmlData data = synth_multimodal_dataset(cfg, seed, iid, std::move(views));
  return run_federated_training(cfg, data, seed);
}

}  // namespace uavfml
