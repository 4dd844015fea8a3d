#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <vector>

#include "uavfml/errors.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/scenario.hpp"

namespace uavfml {

/*
 * Small fixed architecture so every gradient is hand-derived and finite-
 * difference checkable. Encoder: input -> tanh hidden -> linear embedding.
 * Decoder: concatenated gated embeddings -> linear -> softmax.
 */

struct EncoderParams {
  Eigen::MatrixXd W1; /* hidden x input */
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2; /* embed x hidden */
  Eigen::VectorXd b2;

  Eigen::Index flat_size() const { return W1.size() + b1.size() + W2.size() + b2.size(); }

  Eigen::VectorXd to_flat() const {
    Eigen::VectorXd v(flat_size());
    Eigen::Index o = 0;
    v.segment(o, W1.size()) = Eigen::Map<const Eigen::VectorXd>(W1.data(), W1.size());
    o += W1.size();
    v.segment(o, b1.size()) = b1;
    o += b1.size();
    v.segment(o, W2.size()) = Eigen::Map<const Eigen::VectorXd>(W2.data(), W2.size());
    o += W2.size();
    v.segment(o, b2.size()) = b2;
    return v;
  }

  void from_flat(const Eigen::VectorXd& v) {
    if (v.size() != flat_size()) throw DataError("encoder flat vector shape mismatch");
    Eigen::Index o = 0;
    Eigen::Map<Eigen::VectorXd>(W1.data(), W1.size()) = v.segment(o, W1.size());
    o += W1.size();
    b1 = v.segment(o, b1.size());
    o += b1.size();
    Eigen::Map<Eigen::VectorXd>(W2.data(), W2.size()) = v.segment(o, W2.size());
    o += W2.size();
    b2 = v.segment(o, b2.size());
  }
};

struct AttentionHead {
  Eigen::VectorXd wa; /* embed */
  double ba = 0.0;
};

struct ServerParams {
  Eigen::MatrixXd Wd; /* classes x (M * embed) */
  Eigen::VectorXd bd;
  std::vector<AttentionHead> heads; /* one per modality */
};

inline double xavier_span(Eigen::Index fan_in, Eigen::Index fan_out) {
  return std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
}

inline Eigen::MatrixXd init_matrix(Eigen::Index rows, Eigen::Index cols, Rng& rng) {
  const double s = xavier_span(cols, rows);
  Eigen::MatrixXd W(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i) {
    for (Eigen::Index j = 0; j < cols; ++j) W(i, j) = rng.uniform(-s, s);
  }
  return W;
}

inline EncoderParams init_encoder(const FlConfig& fl, int input_dim, Rng& rng) {
  EncoderParams p;
  p.W1 = init_matrix(fl.hidden_dim, input_dim, rng);
  p.b1 = Eigen::VectorXd::Zero(fl.hidden_dim);
  p.W2 = init_matrix(fl.embed_dim, fl.hidden_dim, rng);
  p.b2 = Eigen::VectorXd::Zero(fl.embed_dim);
  return p;
}

inline ServerParams init_server(const FlConfig& fl, int modalities, Rng& rng) {
  ServerParams p;
  p.Wd = init_matrix(fl.num_classes, static_cast<Eigen::Index>(modalities) * fl.embed_dim, rng);
  p.bd = Eigen::VectorXd::Zero(fl.num_classes);
  p.heads.resize(static_cast<std::size_t>(modalities));
  for (auto& h : p.heads) {
    h.wa = init_matrix(fl.embed_dim, 1, rng).col(0);
    h.ba = 0.0;
  }
  return p;
}

struct EncoderCache {
  Eigen::MatrixXd H1; /* n x hidden, post-tanh */
  Eigen::MatrixXd Z;  /* n x embed */
};

inline EncoderCache encoder_forward(const EncoderParams& p, const Eigen::MatrixXd& X) {
  if (X.cols() != p.W1.cols()) throw DataError("encoder input shape mismatch");
  EncoderCache c;
  c.H1 = ((X * p.W1.transpose()).rowwise() + p.b1.transpose()).array().tanh();
  c.Z = (c.H1 * p.W2.transpose()).rowwise() + p.b2.transpose();
  return c;
}

inline Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
  Eigen::MatrixXd P(logits.rows(), logits.cols());
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double mx = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - mx).exp();
    P.row(i) = (e / e.sum()).matrix();
  }
  return P;
}

/* class probabilities for already-gated concatenated embeddings */
inline Eigen::MatrixXd decoder_forward(const ServerParams& p, const Eigen::MatrixXd& D_in) {
  if (D_in.cols() != p.Wd.cols()) throw DataError("decoder input shape mismatch");
  if (D_in.rows() == 0) return Eigen::MatrixXd(0, p.Wd.rows());
  return softmax_rows((D_in * p.Wd.transpose()).rowwise() + p.bd.transpose());
}

inline double cross_entropy(const Eigen::MatrixXd& P, const std::vector<int>& y) {
  if (P.rows() != static_cast<Eigen::Index>(y.size())) throw DataError("label count mismatch");
  double loss = 0.0;
  for (Eigen::Index i = 0; i < P.rows(); ++i) {
    const double p = std::max(P(i, y[static_cast<std::size_t>(i)]), 1e-300);
    loss -= std::log(p);
  }
  return P.rows() > 0 ? loss / static_cast<double>(P.rows()) : 0.0;
}

/* d(mean CE)/d(logits) = (P - onehot) / n */
inline Eigen::MatrixXd ce_logit_grad(const Eigen::MatrixXd& P, const std::vector<int>& y) {
  Eigen::MatrixXd G = P;
  const double inv_n = 1.0 / static_cast<double>(P.rows());
  for (Eigen::Index i = 0; i < P.rows(); ++i) G(i, y[static_cast<std::size_t>(i)]) -= 1.0;
  return G * inv_n;
}

struct EncoderGrad {
  Eigen::MatrixXd W1;
  Eigen::VectorXd b1;
  Eigen::MatrixXd W2;
  Eigen::VectorXd b2;
};

inline EncoderGrad encoder_backward(const EncoderParams& p, const Eigen::MatrixXd& X,
                                    const EncoderCache& c, const Eigen::MatrixXd& dZ) {
  EncoderGrad g;
  g.W2 = dZ.transpose() * c.H1;
  g.b2 = dZ.colwise().sum();
  const Eigen::MatrixXd dH1 = dZ * p.W2;
  const Eigen::MatrixXd dA = dH1.array() * (1.0 - c.H1.array().square());
  g.W1 = dA.transpose() * X;
  g.b1 = dA.colwise().sum();
  return g;
}

inline void sgd_step(EncoderParams& p, const EncoderGrad& g, double lr) {
  p.W1 -= lr * g.W1;
  p.b1 -= lr * g.b1;
  p.W2 -= lr * g.W2;
  p.b2 -= lr * g.b2;
}

}  // namespace uavfml
