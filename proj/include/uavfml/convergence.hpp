#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstddef>
#include <vector>

#include "uavfml/errors.hpp"

namespace uavfml {

/* constants feeding the convergence-rate bound and step-size diagnostic */
struct BoundInputs {
  double L = 1.0;       /* smoothness */
  double sigma = 1.0;   /* per-sample gradient noise */
  double C1 = 1.0;      /* variance constant for local model drift */
  int B = 32;           /* minibatch size */
  int U = 10;           /* UAVs per modality cluster */
  int J = 15;           /* local iterations per round */
  int K = 100;          /* rounds */
  double eta = 0.01;    /* step size */
  int M = 2;            /* modality clusters */
  std::vector<double> gaps = {1.0, 1.0}; /* f_m(w0) - f_m* per modality */
  double mu = 1.0;      /* PL constant, diagnostic only */
  double lambda = 1.0;  /* gradient diversity */

  void validate() const {
    if (!(L > 0) || !(sigma >= 0) || !(C1 > 0) || !(eta > 0) || !(mu > 0) || !(lambda > 0)) {
      throw ConfigError("bound constants must be positive");
    }
    if (B < 1 || U < 1 || J < 1 || K < 1 || M < 1) {
      throw ConfigError("bound counts must be at least 1");
    }
    if (static_cast<int>(gaps.size()) != M) throw ConfigError("need one optimality gap per modality");
    for (double g : gaps) {
      if (!(g >= 0)) throw ConfigError("optimality gaps must be nonnegative");
    }
  }
};

/* the three summands, exposed separately so monotonicity can be checked term-wise */
inline double bound_gap_term(const BoundInputs& in) {
  double s = 0.0;
  for (double g : in.gaps) s += g;
  return 2.0 * s / (in.eta * in.K * in.J);
}

inline double bound_noise_term1(const BoundInputs& in) {
  return in.M * in.L * in.eta * in.sigma * in.sigma / (static_cast<double>(in.U) * in.B);
}

inline double bound_noise_term2(const BoundInputs& in) {
  return 2.0 * in.M * in.eta * in.eta * in.sigma * in.sigma * in.L * in.L * (in.J + 1) *
         (1.0 + 1.0 / in.U) / in.B;
}

inline double convergence_rate_bound(const BoundInputs& in) {
  in.validate();
  return bound_gap_term(in) + bound_noise_term1(in) + bound_noise_term2(in);
}

/* same closed form restricted to one modality cluster */
inline double per_modality_bound(const BoundInputs& in, int m) {
  in.validate();
  if (m < 0 || m >= in.M) throw ConfigError("modality index out of range");
  BoundInputs one = in;
  one.M = 1;
  one.gaps = {in.gaps[static_cast<std::size_t>(m)]};
  return bound_gap_term(one) + bound_noise_term1(one) + bound_noise_term2(one);
}

/*
 * Gradient diversity: max over snapshots of sum_u ||g_u||^2 / ||sum_u g_u||^2.
 * Snapshots whose summed gradient vanishes carry no information and are skipped.
 */
inline double estimate_lambda(const std::vector<std::vector<Eigen::VectorXd>>& snapshots) {
  double best = 0.0;
  bool any = false;
  for (const auto& snap : snapshots) {
    if (snap.empty()) continue;
    double num = 0.0;
    Eigen::VectorXd sum = Eigen::VectorXd::Zero(snap.front().size());
    for (const auto& g : snap) {
      if (g.size() != sum.size()) throw DataError("gradient snapshot shape mismatch");
      num += g.squaredNorm();
      sum += g;
    }
    const double den = sum.squaredNorm();
    if (den <= 0.0) continue; /* degenerate snapshot */
    best = std::max(best, num / den);
    any = true;
  }
  if (!any) throw DataError("all gradient snapshots degenerate (summed gradient is zero)");
  return best;
}

struct StepsizeReport {
  bool satisfied = false;
  double lhs = 0.0;
};

/* lhs <= 0 certifies the step size; lhs/eta is increasing in eta so the
 * satisfied region is an interval (0, eta_max] */
inline StepsizeReport stepsize_condition(const BoundInputs& in) {
  in.validate();
  const double e = in.eta;
  const double cubic = in.lambda * (in.U + 1) * in.L * in.L * e * e * e *
                       (2.0 * in.C1 + static_cast<double>(in.J) * (in.J + 1)) / (2.0 * in.U);
  const double quad = (in.lambda * in.L * e * e / 2.0) * (in.C1 / in.U + 1.0);
  const double lhs = -e / 2.0 + cubic + quad;
  return {lhs <= 0.0, lhs};
}

/* empirical smoothness: steepest observed gradient change per unit parameter move */
inline double estimate_smoothness(const std::vector<Eigen::VectorXd>& params,
                                  const std::vector<Eigen::VectorXd>& grads) {
  if (params.size() != grads.size() || params.size() < 2) {
    throw DataError("need at least two (parameter, gradient) samples");
  }
  double best = 0.0;
  bool any = false;
  for (std::size_t i = 0; i + 1 < params.size(); ++i) {
    const double dw = (params[i + 1] - params[i]).norm();
    if (dw <= 0.0) continue;
    best = std::max(best, (grads[i + 1] - grads[i]).norm() / dw);
    any = true;
  }
  if (!any) throw DataError("all parameter samples coincide");
  return best;
}

/* minibatch-vs-full deviation samples estimate sigma^2 / B */
inline double estimate_sigma2(const std::vector<double>& deviation_sq, int batch) {
  if (deviation_sq.empty()) throw DataError("no variance samples");
  if (batch < 1) throw ConfigError("batch must be at least 1");
  double mean = 0.0;
  for (double s : deviation_sq) mean += s;
  mean /= static_cast<double>(deviation_sq.size());
  return mean * batch;
}

struct BoundReport {
  double bound = 0.0;
  double empirical_mean_grad_sq = 0.0;
  bool violated = false; /* informative only: constants are estimates */
};

inline BoundReport bound_vs_empirical(const std::vector<double>& grad_sq_trace, double bound) {
  BoundReport rep;
  rep.bound = bound;
  if (!grad_sq_trace.empty()) {
    double mean = 0.0;
    for (double g : grad_sq_trace) mean += g;
    rep.empirical_mean_grad_sq = mean / static_cast<double>(grad_sq_trace.size());
  }
  rep.violated = rep.empirical_mean_grad_sq > bound;
  return rep;
}

}  // namespace uavfml
