#pragma once

#include <cmath>
#include <functional>
#include <string>
#include <vector>

#include "uavfml/convex/program.hpp"
#include "uavfml/decision.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/sca/surrogates.hpp"

namespace uavfml {

/*
 * One convexified block: the program, a strictly feasible warm start aligned
 * with the program's variable order, and an extractor that writes the solved
 * vector back into the decision and refreshes the linearization state.
 *
 * All variables are rescaled to O(1): powers and frequencies relative to
 * their caps, positions in km, per-slot rates relative to bandwidth, radar
 * rate slacks relative to the radar rate scale. That keeps one Newton system
 * well conditioned across blocks.
 */
/* The state is re-derived from the updated decision after each accepted block
   (exact tangency at the new incumbent), so apply only writes the decision. */
struct BuiltSubproblem {
  ConvexProgram prog;
  std::vector<double> start;
  std::function<void(const std::vector<double>&, DecisionVector&)> apply;
};

namespace detail {

inline std::string tag3(const char* base, int k, int u, int c) {
  return std::string(base) + "_" + std::to_string(k) + "_" + std::to_string(u) + "_" +
         std::to_string(c);
}
inline std::string tag2(const char* base, int k, int u) {
  return std::string(base) + "_" + std::to_string(k) + "_" + std::to_string(u);
}
inline std::string tag1(const char* base, int k) {
  return std::string(base) + "_" + std::to_string(k);
}

/* log-surrogate pieces at expansion point w > 0: lhs <= A - B / w_var */
struct LogSur {
  double A, B;
  explicit LogSur(double w)
      : A(std::log1p(w) + w / (w + 1.0)), B(w * w / (w + 1.0)) {}
};

inline double floor_pos(double v, double lo) { return v > lo ? v : lo; }

}  // namespace detail

/*
 * Block 1: sensing schedule (relaxed to [0,1]) and sensing power.
 * Per pair slacks: psi = time spent on a target, iota = achievable radar rate
 * (scaled). The product constraint psi * iota >= x * D is split with the
 * difference-of-squares identity and the square lower bound.
 */
inline BuiltSubproblem build_subproblem1(const ScenarioConfig& cfg, const DecisionVector& d,
                                         const SurrogateState& st) {
  const int K = d.K, C = d.C, U = d.U;
  const double PS = cfg.p_se_max;
  const double RS = radar_rate_scale(cfg);
  const double e_scale = std::max(cfg.e_max, 1e-6);

  BuiltSubproblem out;
  ConvexProgram& pr = out.prog;

  std::vector<int> vx(static_cast<std::size_t>(K) * C * U);
  std::vector<int> vp(static_cast<std::size_t>(K) * U);
  std::vector<int> vpsi(static_cast<std::size_t>(K) * U * C);
  std::vector<int> vio(vpsi.size());
  std::vector<int> vt(static_cast<std::size_t>(K));

  std::vector<double> rho(static_cast<std::size_t>(C)); /* scaled radar SNR slope per target */
  double io_ub = 1.0;
  for (int c = 0; c < C; ++c) {
    rho[static_cast<std::size_t>(c)] =
        radar_snr_coef(cfg, cfg.target_positions[static_cast<std::size_t>(c)]) * PS;
    io_ub = std::max(io_ub, std::log2(1.0 + rho[static_cast<std::size_t>(c)]) + 1.0);
  }

  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) {
      for (int u = 0; u < U; ++u) {
        vx[(static_cast<std::size_t>(k) * C + c) * U + u] =
            pr.add_var(detail::tag3("x", k, c, u), 0.0, 1.0);
      }
    }
  }
  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) vp[d.ku(k, u)] = pr.add_var(detail::tag2("p", k, u), 1e-6, 1.0);
  }
  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * U + u) * C + c;
        vpsi[i] = pr.add_var(detail::tag3("psi", k, u, c), 1e-9, 1e7);
        vio[i] = pr.add_var(detail::tag3("io", k, u, c), 1e-9, io_ub);
      }
    }
  }
  for (int k = 0; k < K; ++k) vt[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("t", k), 1e-9, 1e8);
  int vobj = vt[0];
  if (K > 1) vobj = pr.add_var("t_total", 1e-9, 1e9);
  pr.objective = vobj;

  /* fixed per-(k,u) latency and energy from the other two blocks */
  std::vector<double> fixed_lat(static_cast<std::size_t>(K) * U);
  std::vector<double> fixed_en(fixed_lat.size());
  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      const RoundBreakdown rb = round_breakdown(cfg, d, k, u);
      fixed_lat[d.ku(k, u)] = rb.latency.t_train + rb.latency.t_embed_up +
                              rb.latency.t_model_up + rb.latency.t_bs_train +
                              rb.latency.t_download;
      fixed_en[d.ku(k, u)] = rb.energy.e_train + rb.energy.e_embed_up + rb.energy.e_model_up;
    }
  }

  out.start.assign(pr.vars.size(), 0.0);
  std::vector<double>& x0 = out.start;

  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      const double p_i = std::max(1e-6, d.p_se[d.ku(k, u)] / PS);
      x0[static_cast<std::size_t>(vp[d.ku(k, u)])] = p_i;
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * U + u) * C + c;
        const std::size_t xi = (static_cast<std::size_t>(k) * C + c) * U + u;
        const double psi_i = detail::floor_pos(st.psi[i], SurrogateState::kFloorTime);
        const double io_i =
            detail::floor_pos(st.iota[i] / RS, SurrogateState::kFloorRateScaled);
        const double dd = cfg.samples_per_uav[static_cast<std::size_t>(u)] / RS;
        const double s_i = psi_i + io_i;
        const double lam_i = rho[static_cast<std::size_t>(c)] * p_i;
        const detail::LogSur ls(lam_i);

        /* psi * iota >= x * D, via (psi+io)^2 - (psi-io)^2 = 4 psi io */
        Constraint pair;
        pair.name = detail::tag3("sense_pair", k, u, c);
        pair.atoms = {Atom::square_diff(0.25, vpsi[i], vio[i]),
                      Atom::affine(-0.5 * s_i, vpsi[i]), Atom::affine(-0.5 * s_i, vio[i]),
                      Atom::constant(0.25 * s_i * s_i), Atom::affine(dd, vx[xi])};
        pr.add_con(std::move(pair));

        /* iota must stay below the surrogate radar rate */
        Constraint rate;
        rate.name = detail::tag3("sense_rate", k, u, c);
        rate.atoms = {Atom::affine(std::log(2.0), vio[i]), Atom::constant(-ls.A),
                      Atom::reciprocal(ls.B / rho[static_cast<std::size_t>(c)], vp[d.ku(k, u)])};
        pr.add_con(std::move(rate));

        /* selected pairs must reach the detection rate threshold */
        Constraint thr;
        thr.name = detail::tag3("radar_floor", k, u, c);
        thr.atoms = {Atom::affine(cfg.radar_rate_threshold * std::log(2.0) / RS, vx[xi]),
                     Atom::constant(-ls.A),
                     Atom::reciprocal(ls.B / rho[static_cast<std::size_t>(c)], vp[d.ku(k, u)])};
        pr.add_con(std::move(thr));

        x0[static_cast<std::size_t>(vpsi[i])] = psi_i * (1.0 + 1e-3);
        x0[static_cast<std::size_t>(vio[i])] = io_i * (1.0 - 1e-5);
        /* keep the per-target sum strictly below 1 at the start */
        x0[static_cast<std::size_t>(vx[xi])] = d.x(k, c, u) > 0.5 ? 1.0 - 1e-4 : 1e-8;
      }
    }
  }

  for (int k = 0; k < K; ++k) {
    for (int c = 0; c < C; ++c) {
      Constraint once;
      once.name = detail::tag2("target_once", k, c);
      for (int u = 0; u < U; ++u) {
        once.atoms.push_back(Atom::affine(1.0, vx[(static_cast<std::size_t>(k) * C + c) * U + u]));
      }
      once.atoms.push_back(Atom::constant(-1.0));
      pr.add_con(std::move(once));
    }
  }

  for (int u = 0; u < U; ++u) {
    Constraint en;
    en.name = detail::tag1("uav_energy", u);
    double fixed = -cfg.e_max;
    for (int k = 0; k < K; ++k) {
      fixed += fixed_en[d.ku(k, u)];
      const double p_i = x0[static_cast<std::size_t>(vp[d.ku(k, u)])];
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * U + u) * C + c;
        const double psi_i = detail::floor_pos(st.psi[i], SurrogateState::kFloorTime);
        en.atoms.push_back(
            Atom::quadratic(PS * psi_i / (2.0 * p_i) / e_scale, vp[d.ku(k, u)]));
        en.atoms.push_back(Atom::quadratic(PS * p_i / (2.0 * psi_i) / e_scale, vpsi[i]));
      }
    }
    en.atoms.push_back(Atom::constant(fixed / e_scale));
    pr.add_con(std::move(en));
  }

  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      Constraint epi;
      epi.name = detail::tag2("round_time", k, u);
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * U + u) * C + c;
        epi.atoms.push_back(Atom::affine(1.0, vpsi[i]));
      }
      epi.atoms.push_back(Atom::constant(fixed_lat[d.ku(k, u)]));
      epi.atoms.push_back(Atom::affine(-1.0, vt[static_cast<std::size_t>(k)]));
      pr.add_con(std::move(epi));
    }
  }
  if (K > 1) {
    Constraint tot;
    tot.name = "total_time";
    for (int k = 0; k < K; ++k) tot.atoms.push_back(Atom::affine(1.0, vt[static_cast<std::size_t>(k)]));
    tot.atoms.push_back(Atom::affine(-1.0, vobj));
    pr.add_con(std::move(tot));
  }

  /* epigraph starts sit strictly above their sums */
  for (int k = 0; k < K; ++k) {
    double worst = 0.0;
    for (int u = 0; u < U; ++u) {
      double s = fixed_lat[d.ku(k, u)];
      for (int c = 0; c < C; ++c) {
        const std::size_t i = (static_cast<std::size_t>(k) * U + u) * C + c;
        s += x0[static_cast<std::size_t>(vpsi[i])];
      }
      worst = std::max(worst, s);
    }
    x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])] = worst * (1.0 + 1e-6) + 1e-9;
  }
  if (K > 1) {
    double tot = 0.0;
    for (int k = 0; k < K; ++k) tot += x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])];
    x0[static_cast<std::size_t>(vobj)] = tot * (1.0 + 1e-6) + 1e-9;
  }

  out.apply = [=](const std::vector<double>& sol, DecisionVector& dec) {
    for (int k = 0; k < K; ++k) {
      for (int u = 0; u < U; ++u) {
        dec.p_se[dec.ku(k, u)] = sol[static_cast<std::size_t>(vp[dec.ku(k, u)])] * PS;
        for (int c = 0; c < C; ++c) {
          dec.sched[dec.kcu(k, c, u)] =
              sol[static_cast<std::size_t>(vx[(static_cast<std::size_t>(k) * C + c) * U + u])];
        }
      }
    }
  };
  return out;
}

/*
 * Block 2: trajectories, upload powers, onboard frequencies. Interior
 * waypoints are free; the first and last are pinned to the mission endpoints.
 */
inline BuiltSubproblem build_subproblem2(const ScenarioConfig& cfg, const DecisionVector& d,
                                         const SurrogateState& st) {
  const int K = d.K, U = d.U, T = d.T;
  const double PC = cfg.p_cm_max;
  const double FU = cfg.f_u_max;
  const double L = 1000.0;           /* position scale, m */
  const double B = cfg.bandwidth_uav;
  const double G0 = snr_gain(cfg);
  const double e_scale = std::max(cfg.e_max, 1e-6);
  const double Ht = cfg.altitude / L;
  const double step = cfg.v_max * cfg.slot_duration() / L;
  const double per_slot_bits = (cfg.embed_payload + cfg.model_payload) / T;
  const double pay = per_slot_bits / B; /* product floor in scaled units */

  const double qix = cfg.start_pos.x / L, qiy = cfg.start_pos.y / L;
  const double qfx = cfg.end_pos.x / L, qfy = cfg.end_pos.y / L;
  const double reach =
      std::hypot(qix, qiy) + std::hypot(qfx, qfy) + step * T + Ht + 1.0;
  const double a_ub = reach * reach + 1.0;
  const double gamma_ub = G0 * PC / (cfg.altitude * cfg.altitude) * 1.2 + 1.0;
  const double z_ub = std::log2(1.0 + gamma_ub) + 1.0;

  BuiltSubproblem out;
  ConvexProgram& pr = out.prog;

  const std::size_t nslot = static_cast<std::size_t>(K) * U * T;
  std::vector<int> wx(nslot, -1), wy(nslot, -1);
  std::vector<int> vpc(nslot), vg(nslot), vz(nslot), vgm(nslot), va(nslot);
  std::vector<int> vf(static_cast<std::size_t>(K) * U);
  std::vector<int> vt(static_cast<std::size_t>(K));

  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      for (int t = 1; t + 1 < T; ++t) {
        const std::size_t i = d.kut(k, u, t);
        wx[i] = pr.add_var(detail::tag3("wx", k, u, t), -reach, reach);
        wy[i] = pr.add_var(detail::tag3("wy", k, u, t), -reach, reach);
      }
      for (int t = 0; t < T; ++t) {
        const std::size_t i = d.kut(k, u, t);
        vpc[i] = pr.add_var(detail::tag3("pc", k, u, t), 1e-9, 1.0);
        vg[i] = pr.add_var(detail::tag3("g", k, u, t), 1e-9, 1e6);
        vz[i] = pr.add_var(detail::tag3("z", k, u, t), 1e-9, z_ub);
        vgm[i] = pr.add_var(detail::tag3("gm", k, u, t), 1e-12, gamma_ub);
        va[i] = pr.add_var(detail::tag3("a", k, u, t), 0.5 * Ht * Ht, a_ub);
      }
      vf[d.ku(k, u)] = pr.add_var(detail::tag2("f", k, u), 1e-6, 1.0);
    }
  }
  for (int k = 0; k < K; ++k) vt[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("t", k), 1e-9, 1e8);
  int vobj = vt[0];
  if (K > 1) vobj = pr.add_var("t_total", 1e-9, 1e9);
  pr.objective = vobj;

  std::vector<double> fixed_lat(static_cast<std::size_t>(K) * U);
  std::vector<double> fixed_en(fixed_lat.size());
  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      const RoundBreakdown rb = round_breakdown(cfg, d, k, u);
      fixed_lat[d.ku(k, u)] = rb.latency.t_sense + rb.latency.t_bs_train + rb.latency.t_download;
      fixed_en[d.ku(k, u)] = rb.energy.e_sense;
    }
  }

  out.start.assign(pr.vars.size(), 0.0);
  std::vector<double>& x0 = out.start;

  const double kappa = L * L / (G0 * PC); /* pc >= kappa * gamma * alpha */

  for (int k = 0; k < K; ++k) {
    for (int u = 0; u < U; ++u) {
      for (int t = 0; t < T; ++t) {
        const std::size_t i = d.kut(k, u, t);
        const double g_i = detail::floor_pos(st.g[i], SurrogateState::kFloorTime);
        const double z_i =
            detail::floor_pos(st.z[i] / B, SurrogateState::kFloorRateScaled);
        const double gm_i = detail::floor_pos(st.gamma[i], SurrogateState::kFloorSnr);
        const double a_i = std::max(st.alpha[i] / (L * L), 0.9 * Ht * Ht);
        const double s_i = g_i + z_i;
        const detail::LogSur ls(gm_i);

        Constraint pair;
        pair.name = detail::tag3("up_pair", k, u, t);
        pair.atoms = {Atom::square_diff(0.25, vg[i], vz[i]), Atom::affine(-0.5 * s_i, vg[i]),
                      Atom::affine(-0.5 * s_i, vz[i]), Atom::constant(0.25 * s_i * s_i),
                      Atom::constant(pay)};
        pr.add_con(std::move(pair));

        Constraint rate;
        rate.name = detail::tag3("up_rate", k, u, t);
        rate.atoms = {Atom::affine(std::log(2.0), vz[i]), Atom::constant(-ls.A),
                      Atom::reciprocal(ls.B, vgm[i])};
        pr.add_con(std::move(rate));

        Constraint snr;
        snr.name = detail::tag3("snr_pow", k, u, t);
        snr.atoms = {Atom::quadratic(kappa * a_i / (2.0 * gm_i), vgm[i]),
                     Atom::quadratic(kappa * gm_i / (2.0 * a_i), va[i]),
                     Atom::affine(-1.0, vpc[i])};
        pr.add_con(std::move(snr));

        Constraint pos;
        pos.name = detail::tag3("pos_norm", k, u, t);
        if (wx[i] >= 0) {
          pos.atoms = {Atom::quadratic(1.0, wx[i]), Atom::quadratic(1.0, wy[i]),
                       Atom::constant(Ht * Ht), Atom::affine(-1.0, va[i])};
        } else {
          const double cx = (t == 0) ? qix : qfx;
          const double cy = (t == 0) ? qiy : qfy;
          pos.atoms = {Atom::constant(cx * cx + cy * cy + Ht * Ht), Atom::affine(-1.0, va[i])};
        }
        pr.add_con(std::move(pos));

        x0[static_cast<std::size_t>(vpc[i])] =
            std::min(1.0, std::max(1e-9, d.p_cm[i] / PC));
        x0[static_cast<std::size_t>(vg[i])] = g_i * (1.0 + 3e-3);
        x0[static_cast<std::size_t>(vz[i])] = z_i * (1.0 - 1e-3);
        x0[static_cast<std::size_t>(vgm[i])] = gm_i * (1.0 - 1e-4);
        x0[static_cast<std::size_t>(va[i])] = a_i * (1.0 + 1e-5);
        if (wx[i] >= 0) {
          x0[static_cast<std::size_t>(wx[i])] = d.traj_x[i] / L;
          x0[static_cast<std::size_t>(wy[i])] = d.traj_y[i] / L;
        }
      }

      for (int t = 0; t + 1 < T; ++t) {
        const std::size_t a = d.kut(k, u, t), b = d.kut(k, u, t + 1);
        Constraint sl;
        sl.name = detail::tag3("step", k, u, t);
        auto leg = [&](int va_, int vb_, double ca, double cb) {
          if (va_ >= 0 && vb_ >= 0) return Atom::square_diff(1.0, va_, vb_);
          if (va_ >= 0) return Atom::square_diff_const(1.0, va_, cb);
          if (vb_ >= 0) return Atom::square_diff_const(1.0, vb_, ca);
          return Atom::constant((ca - cb) * (ca - cb));
        };
        const double cax = (t == 0) ? qix : qfx, cay = (t == 0) ? qiy : qfy;
        const double cbx = (t + 1 == T - 1) ? qfx : qix, cby = (t + 1 == T - 1) ? qfy : qiy;
        sl.atoms = {leg(wx[a], wx[b], cax, cbx), leg(wy[a], wy[b], cay, cby),
                    Atom::constant(-step * step)};
        pr.add_con(std::move(sl));
      }

      const double cycles = cfg.local_iters *
                            cfg.cycles_per_sample[static_cast<std::size_t>(u)] *
                            cfg.samples_per_uav[static_cast<std::size_t>(u)];
      Constraint epi;
      epi.name = detail::tag2("round_time", k, u);
      epi.atoms = {Atom::constant(fixed_lat[d.ku(k, u)]),
                   Atom::reciprocal(cycles / FU, vf[d.ku(k, u)])};
      for (int t = 0; t < T; ++t) epi.atoms.push_back(Atom::affine(1.0, vg[d.kut(k, u, t)]));
      epi.atoms.push_back(Atom::affine(-1.0, vt[static_cast<std::size_t>(k)]));
      pr.add_con(std::move(epi));

      x0[static_cast<std::size_t>(vf[d.ku(k, u)])] =
          std::min(1.0, std::max(1e-6, d.f_u[d.ku(k, u)] / FU));
    }
  }

  for (int u = 0; u < U; ++u) {
    Constraint en;
    en.name = detail::tag1("uav_energy", u);
    double fixed = -cfg.e_max;
    for (int k = 0; k < K; ++k) {
      fixed += fixed_en[d.ku(k, u)];
      const double cycles = cfg.local_iters *
                            cfg.cycles_per_sample[static_cast<std::size_t>(u)] *
                            cfg.samples_per_uav[static_cast<std::size_t>(u)];
      en.atoms.push_back(Atom::quadratic(
          cfg.switched_capacitance * cycles * FU * FU / e_scale, vf[d.ku(k, u)]));
      for (int t = 0; t < T; ++t) {
        const std::size_t i = d.kut(k, u, t);
        const double g_i = detail::floor_pos(st.g[i], SurrogateState::kFloorTime);
        const double pc_i = x0[static_cast<std::size_t>(vpc[i])];
        en.atoms.push_back(Atom::quadratic(PC * pc_i / (2.0 * g_i) / e_scale, vg[i]));
        en.atoms.push_back(Atom::quadratic(PC * g_i / (2.0 * pc_i) / e_scale, vpc[i]));
      }
    }
    en.atoms.push_back(Atom::constant(fixed / e_scale));
    pr.add_con(std::move(en));
  }

  if (K > 1) {
    Constraint tot;
    tot.name = "total_time";
    for (int k = 0; k < K; ++k) tot.atoms.push_back(Atom::affine(1.0, vt[static_cast<std::size_t>(k)]));
    tot.atoms.push_back(Atom::affine(-1.0, vobj));
    pr.add_con(std::move(tot));
  }

  for (int k = 0; k < K; ++k) {
    double worst = 0.0;
    for (int u = 0; u < U; ++u) {
      const double cycles = cfg.local_iters *
                            cfg.cycles_per_sample[static_cast<std::size_t>(u)] *
                            cfg.samples_per_uav[static_cast<std::size_t>(u)];
      double s = fixed_lat[d.ku(k, u)] +
                 cycles / (FU * x0[static_cast<std::size_t>(vf[d.ku(k, u)])]);
      for (int t = 0; t < T; ++t) s += x0[static_cast<std::size_t>(vg[d.kut(k, u, t)])];
      worst = std::max(worst, s);
    }
    x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])] = worst * (1.0 + 1e-6) + 1e-9;
  }
  if (K > 1) {
    double tot = 0.0;
    for (int k = 0; k < K; ++k) tot += x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])];
    x0[static_cast<std::size_t>(vobj)] = tot * (1.0 + 1e-6) + 1e-9;
  }

  out.apply = [=](const std::vector<double>& sol, DecisionVector& dec) {
    for (int k = 0; k < K; ++k) {
      for (int u = 0; u < U; ++u) {
        dec.f_u[dec.ku(k, u)] = sol[static_cast<std::size_t>(vf[dec.ku(k, u)])] * FU;
        for (int t = 0; t < T; ++t) {
          const std::size_t i = dec.kut(k, u, t);
          if (wx[i] >= 0) {
            dec.traj_x[i] = sol[static_cast<std::size_t>(wx[i])] * L;
            dec.traj_y[i] = sol[static_cast<std::size_t>(wy[i])] * L;
          }
          dec.p_cm[i] = sol[static_cast<std::size_t>(vpc[i])] * PC;
        }
      }
    }
  };
  return out;
}

/*
 * Block 3: server power and frequency. Download distance is set by the shared
 * final waypoint, so one download-time slack per round covers every UAV.
 */
inline BuiltSubproblem build_subproblem3(const ScenarioConfig& cfg, const DecisionVector& d,
                                         const SurrogateState& st) {
  const int K = d.K, U = d.U;
  const double PB = cfg.p_bs_max;
  const double FB = cfg.f_bs_max;

  BuiltSubproblem out;
  ConvexProgram& pr = out.prog;

  std::vector<int> vpb(static_cast<std::size_t>(K)), vfb(vpb.size()), vth(vpb.size()),
      vt(vpb.size());
  for (int k = 0; k < K; ++k) {
    vpb[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("pb", k), 1e-9, 1.0);
    vfb[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("fb", k), 1e-6, 1.0);
    vth[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("th", k), 1e-9, 1e6);
    vt[static_cast<std::size_t>(k)] = pr.add_var(detail::tag1("t", k), 1e-9, 1e8);
  }
  int vobj = vt[0];
  if (K > 1) vobj = pr.add_var("t_total", 1e-9, 1e9);
  pr.objective = vobj;

  out.start.assign(pr.vars.size(), 0.0);
  std::vector<double>& x0 = out.start;

  const double bs_cycles = cfg.server_iters * cfg.cycles_per_sample_bs * cfg.fl.probe_set_size;

  for (int k = 0; k < K; ++k) {
    const int last = d.T - 1;
    const double d2 = bs_dist2(cfg, d.traj_x[d.kut(k, 0, last)], d.traj_y[d.kut(k, 0, last)]);
    const double rho_b = snr_gain(cfg) * PB / d2; /* xi = rho_b * pb */
    const double xi_i = detail::floor_pos(st.xi[static_cast<std::size_t>(k)],
                                          SurrogateState::kFloorSnr);
    const detail::LogSur ls(xi_i);

    Constraint rate;
    rate.name = detail::tag1("dl_rate", k);
    rate.atoms = {Atom::reciprocal(cfg.global_payload * std::log(2.0) / cfg.bandwidth_bs,
                                   vth[static_cast<std::size_t>(k)]),
                  Atom::reciprocal(ls.B / rho_b, vpb[static_cast<std::size_t>(k)]),
                  Atom::constant(-ls.A)};
    pr.add_con(std::move(rate));

    for (int u = 0; u < U; ++u) {
      const RoundBreakdown rb = round_breakdown(cfg, d, k, u);
      const double fixed = rb.latency.t_sense + rb.latency.t_train + rb.latency.t_embed_up +
                           rb.latency.t_model_up;
      Constraint epi;
      epi.name = detail::tag2("round_time", k, u);
      epi.atoms = {Atom::constant(fixed), Atom::reciprocal(bs_cycles / FB, vfb[static_cast<std::size_t>(k)]),
                   Atom::affine(1.0, vth[static_cast<std::size_t>(k)]),
                   Atom::affine(-1.0, vt[static_cast<std::size_t>(k)])};
      pr.add_con(std::move(epi));
    }

    x0[static_cast<std::size_t>(vpb[static_cast<std::size_t>(k)])] =
        std::min(1.0, std::max(1e-9, d.p_bs[static_cast<std::size_t>(k)] / PB));
    x0[static_cast<std::size_t>(vfb[static_cast<std::size_t>(k)])] =
        std::min(1.0, std::max(1e-6, d.f_bs[static_cast<std::size_t>(k)] / FB));
    x0[static_cast<std::size_t>(vth[static_cast<std::size_t>(k)])] =
        detail::floor_pos(st.theta[static_cast<std::size_t>(k)], SurrogateState::kFloorTime) *
        (1.0 + 1e-4);
  }

  if (K > 1) {
    Constraint tot;
    tot.name = "total_time";
    for (int k = 0; k < K; ++k) tot.atoms.push_back(Atom::affine(1.0, vt[static_cast<std::size_t>(k)]));
    tot.atoms.push_back(Atom::affine(-1.0, vobj));
    pr.add_con(std::move(tot));
  }

  for (int k = 0; k < K; ++k) {
    double worst = 0.0;
    for (int u = 0; u < U; ++u) {
      const RoundBreakdown rb = round_breakdown(cfg, d, k, u);
      const double fixed = rb.latency.t_sense + rb.latency.t_train + rb.latency.t_embed_up +
                           rb.latency.t_model_up;
      const double s = fixed +
                       bs_cycles / (FB * x0[static_cast<std::size_t>(vfb[static_cast<std::size_t>(k)])]) +
                       x0[static_cast<std::size_t>(vth[static_cast<std::size_t>(k)])];
      worst = std::max(worst, s);
    }
    x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])] = worst * (1.0 + 1e-6) + 1e-9;
  }
  if (K > 1) {
    double tot = 0.0;
    for (int k = 0; k < K; ++k) tot += x0[static_cast<std::size_t>(vt[static_cast<std::size_t>(k)])];
    x0[static_cast<std::size_t>(vobj)] = tot * (1.0 + 1e-6) + 1e-9;
  }

  out.apply = [=](const std::vector<double>& sol, DecisionVector& dec) {
    for (int k = 0; k < K; ++k) {
      dec.p_bs[static_cast<std::size_t>(k)] =
          sol[static_cast<std::size_t>(vpb[static_cast<std::size_t>(k)])] * PB;
      dec.f_bs[static_cast<std::size_t>(k)] =
          sol[static_cast<std::size_t>(vfb[static_cast<std::size_t>(k)])] * FB;
    }
  };
  return out;
}

}  // namespace uavfml
