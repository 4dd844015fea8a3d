/*
 * End-to-end acceptance gate. Each numbered check prints exactly one
 * PASS/FAIL line; the process exits nonzero if any check fails.
 *
 * argv[1]: path to the CLI binary (used by the sweep and determinism checks).
 */

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "uavfml/convergence.hpp"
#include "uavfml/csv.hpp"
#include "uavfml/fml/training.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/rng.hpp"
#include "uavfml/sca/bcd.hpp"
#include "uavfml/sca/oracle.hpp"
#include "uavfml/sca/surrogates.hpp"
#include "uavfml/scenario.hpp"

namespace {

using namespace uavfml;
namespace fs = std::filesystem;

int g_failures = 0;

class Criterion {
 public:
  Criterion(int number, std::string label)
      : number_(number), label_(std::move(label)), t0_(std::chrono::steady_clock::now()) {}

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0_).count();
  }

  void pass(const std::string& detail) { emit(true, detail); }
  void fail(const std::string& detail) { emit(false, detail); }

  void finish(bool ok, const std::string& detail, double budget_s) {
    if (ok && budget_s > 0.0 && elapsed() > budget_s) {
      emit(false, detail + "; exceeded " + std::to_string(budget_s) + " s budget");
      return;
    }
    emit(ok, detail);
  }

 private:
  void emit(bool ok, const std::string& detail) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.1f", elapsed());
    std::cout << (ok ? "PASS" : "FAIL") << " criterion " << number_ << ": " << label_ << " — "
              << detail << " (" << buf << " s)\n";
    std::cout.flush();
    if (!ok) ++g_failures;
  }

  int number_;
  std::string label_;
  std::chrono::steady_clock::time_point t0_;
};

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

/* shared audit accumulator feeding check 5 */
struct AuditAgg {
  double worst = 0.0;
  int runs = 0;
  bool integral = true;
};

BcdResult run_audited(const ScenarioConfig& cfg, BaselineMode mode, AuditAgg& agg) {
  BcdResult res = bcd_optimize(cfg, mode);
  const ViolationReport rep = check_feasibility(cfg, res.decision);
  agg.worst = std::max(agg.worst, rep.max_violation);
  agg.runs += 1;
  for (double x : res.decision.sched) {
    if (x != 0.0 && x != 1.0) agg.integral = false;
  }
  return res;
}

/* ---- 1: surrogate bounds and tangency ------------------------------- */

void check_surrogates() {
  Criterion c(1, "surrogate bounds hold and are tight at the iterate");
  try {
    Rng rng(101, 1);
    int n = 10000;
    double worst_gap = 0.0, worst_tan = 0.0;
    for (int i = 0; i < n; ++i) {
      const double z = rng.uniform(1e-6, 50.0), zi = rng.uniform(1e-6, 50.0);
      const double a = rng.uniform(1e-6, 10.0), b = rng.uniform(1e-6, 10.0);
      const double ai = rng.uniform(1e-6, 10.0), bi = rng.uniform(1e-6, 10.0);
      const double s = rng.uniform(1e-6, 20.0), si = rng.uniform(1e-6, 20.0);

      worst_gap = std::max(worst_gap, log_surrogate_lhs(z, zi) - std::log1p(z));
      worst_gap = std::max(worst_gap, a * b - bilinear_upper(a, b, ai, bi));
      worst_gap = std::max(worst_gap, square_lower(s, si) - s * s);

      auto rel = [](double x, double y) {
        return std::abs(x - y) / std::max({1.0, std::abs(x), std::abs(y)});
      };
      worst_tan = std::max(worst_tan, rel(log_surrogate_lhs(zi, zi), std::log1p(zi)));
      worst_tan = std::max(worst_tan, rel(bilinear_upper(ai, bi, ai, bi), ai * bi));
      worst_tan = std::max(worst_tan, rel(square_lower(si, si), si * si));
    }
    const bool ok = worst_gap <= 1e-12 && worst_tan <= 1e-12;
    c.finish(ok,
             "10^4 samples, worst bound slack " + num(worst_gap) + ", worst tangency error " +
                 num(worst_tan),
             5.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 2: descent trace monotone, settled by iteration 10 -------------- */

void check_bcd_monotone(AuditAgg& agg) {
  Criterion c(2, "objective trace nonincreasing and settled within 10 iterations");
  try {
    const ScenarioConfig base = default_scenario();
    bool ok = true;
    std::string detail;
    double worst_rise = 0.0;
    int worst_settle = 0;
    for (std::uint64_t seed = 0; seed <= 10 && ok; ++seed) {
      const ScenarioConfig cfg = seed == 0 ? base : perturbed_scenario(base, seed);
      const BcdResult res = run_audited(cfg, BaselineMode::T_OPT, agg);
      int settled = -1;
      for (std::size_t i = 1; i < res.trace.size(); ++i) {
        const double prev = res.trace[i - 1].objective_s;
        const double cur = res.trace[i].objective_s;
        worst_rise = std::max(worst_rise, (cur - prev) / prev);
        if (settled < 0 && std::abs(cur - prev) / prev < 1e-3) {
          settled = res.trace[i].iteration;
        }
      }
      if (worst_rise > 1e-9) {
        ok = false;
        detail = "seed " + std::to_string(seed) + " trace rose by " + num(worst_rise);
      }
      if (settled < 0 || settled > 10) {
        ok = false;
        detail = "seed " + std::to_string(seed) + " not settled by iteration 10";
      }
      worst_settle = std::max(worst_settle, settled);
    }
    if (ok) {
      detail = "default + 10 seeds, worst rise " + num(worst_rise) + ", latest settle iteration " +
               std::to_string(worst_settle);
    }
    c.finish(ok, detail, 180.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 3: full descent at least matches every ablation ----------------- */

void check_baseline_ordering(AuditAgg& agg) {
  Criterion c(3, "joint descent beats each single-block ablation on >= 95% of seeds");
  try {
    const ScenarioConfig base = default_scenario();
    const int seeds = 20;
    int wins = 0;
    std::string losses;
    for (std::uint64_t seed = 1; seed <= seeds; ++seed) {
      const ScenarioConfig cfg = perturbed_scenario(base, seed + 100);
      const double t_opt = run_audited(cfg, BaselineMode::T_OPT, agg).objective;
      bool win = true;
      for (const BaselineMode m :
           {BaselineMode::UAV_SS_PC, BaselineMode::UAV_T_RA, BaselineMode::BS_RA}) {
        const double b = run_audited(cfg, m, agg).objective;
        if (t_opt > b * (1.0 + 1e-9)) win = false;
      }
      if (win) {
        ++wins;
      } else {
        losses += " " + std::to_string(seed);
      }
    }
    const bool ok = wins * 100 >= seeds * 95;
    c.finish(ok,
             std::to_string(wins) + "/" + std::to_string(seeds) + " scenarios" +
                 (losses.empty() ? "" : " (lost on seeds" + losses + ")"),
             600.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 4: grid oracle agreement on exhaustively small instances -------- */

void check_oracle(AuditAgg& agg) {
  Criterion c(4, "descent lands within 1% of the grid oracle on tiny instances");
  try {
    double worst = 0.0;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      const ScenarioConfig cfg = tiny_scenario(seed);
      const double mine = run_audited(cfg, BaselineMode::T_OPT, agg).objective;
      const OracleResult oracle = brute_force_oracle(cfg);
      worst = std::max(worst, std::abs(mine - oracle.objective) / oracle.objective);
    }
    c.finish(worst <= 0.01, "5 instances, worst relative gap " + num(worst), 120.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 5: every produced decision passes the exact audit --------------- */

void check_feasibility_audit(const AuditAgg& agg) {
  Criterion c(5, "all solver outputs pass the exact constraint audit after rounding");
  const bool ok = agg.runs > 0 && agg.integral && agg.worst <= 1e-6;
  c.finish(ok,
           std::to_string(agg.runs) + " audited runs, worst scaled violation " + num(agg.worst) +
               (agg.integral ? ", schedules integral" : ", NON-INTEGRAL schedule found"),
           0.0);
}

/* ---- 6: sweep directions through the CLI ------------------------------ */

struct SweepSpec {
  const char* param;
  double lo, hi;
  bool expect_nonincreasing;
};

void check_sweeps(const std::string& cli, const fs::path& work) {
  Criterion c(6, "five-point resource sweeps move latency the expected way");
  try {
    const ScenarioConfig d = default_scenario();
    const std::vector<SweepSpec> specs = {
        {"p_se_max", 0.5 * d.p_se_max, 1.5 * d.p_se_max, true},
        {"f_u_max", 0.5 * d.f_u_max, 1.5 * d.f_u_max, true},
        {"p_cm_max", 0.5 * d.p_cm_max, 1.5 * d.p_cm_max, true},
        {"f_bs_max", 0.5 * d.f_bs_max, 1.5 * d.f_bs_max, true},
        {"p_bs_max", 0.5 * d.p_bs_max, 1.5 * d.p_bs_max, true},
        {"bandwidth", 0.5 * d.bandwidth_uav, 1.5 * d.bandwidth_uav, true},
        {"e_max", 0.75 * d.e_max, 1.5 * d.e_max, true},
        {"s_l", 0.5 * d.model_payload, 2.0 * d.model_payload, false},
    };
    bool ok = true;
    std::string detail;
    for (const auto& s : specs) {
      const fs::path out = work / (std::string("sweep_") + s.param);
      char range[96];
      std::snprintf(range, sizeof range, "%.17g:%.17g:5", s.lo, s.hi);
      const std::string cmd = "\"" + cli + "\" sweep --param " + s.param + " --range " + range +
                              " --mode t-opt --out \"" + out.string() + "\" > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) {
        ok = false;
        detail = std::string(s.param) + " sweep exited nonzero";
        break;
      }
      const CsvTable table = read_csv((out / "sweep.csv").string());
      if (table.rows.size() != 5) {
        ok = false;
        detail = std::string(s.param) + " sweep.csv has wrong row count";
        break;
      }
      std::vector<double> lat;
      for (std::size_t i = 0; i < table.rows.size(); ++i) {
        lat.push_back(parse_double_cell(table.rows[i].at(1), i + 2, "sweep.csv"));
      }
      for (std::size_t i = 1; i < lat.size() && ok; ++i) {
        const double step = (lat[i] - lat[i - 1]) / lat[i - 1];
        const bool bad = s.expect_nonincreasing ? step > 1e-6 : step < -1e-6;
        if (bad) {
          ok = false;
          detail = std::string(s.param) + " direction broken at point " + std::to_string(i) +
                   " (relative step " + num(step) + ")";
        }
      }
      if (!ok) break;
    }
    if (ok) detail = "8 parameters, 5 points each, directions as predicted";
    c.finish(ok, detail, 900.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 7: backprop vs central differences ------------------------------- */

double gradcheck_draw(std::uint64_t seed) {
  Rng rng(seed, 8);
  FlConfig fl;
  fl.hidden_dim = 5 + static_cast<int>(rng.next_below(4));
  fl.embed_dim = 3 + static_cast<int>(rng.next_below(3));
  fl.num_classes = 3 + static_cast<int>(rng.next_below(4));
  const int M = 2, n = 6 + static_cast<int>(rng.next_below(6));
  const int input = 4 + static_cast<int>(rng.next_below(5));

  const EncoderParams enc = init_encoder(fl, input, rng);
  const ServerParams server = init_server(fl, M, rng);
  Eigen::MatrixXd X(n, input);
  std::vector<int> y(static_cast<std::size_t>(n));
  std::vector<Eigen::MatrixXd> hs, zs;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < input; ++j) X(i, j) = rng.normal();
    y[static_cast<std::size_t>(i)] = static_cast<int>(rng.next_below(fl.num_classes));
  }
  for (int m = 0; m < M; ++m) {
    Eigen::MatrixXd h(n, fl.embed_dim), z(n, fl.embed_dim);
    for (int i = 0; i < n; ++i)
      for (int j = 0; j < fl.embed_dim; ++j) {
        h(i, j) = rng.normal();
        z(i, j) = rng.normal();
      }
    hs.push_back(h);
    zs.push_back(z);
  }
  LocalContext ctx{&server, Eigen::VectorXd::Constant(M, 0.5), {}, 0};
  for (int m = 0; m < M; ++m) {
    Eigen::VectorXd fill(fl.embed_dim);
    for (int j = 0; j < fl.embed_dim; ++j) fill(j) = rng.normal() * 0.2;
    ctx.fills.push_back(fill);
  }

  /* fourth-order central stencil: at h=1e-3 both truncation and roundoff sit
   * orders of magnitude below the 1e-5 acceptance line even on near-zero
   * gradient coordinates */
  const double h = 1e-3;
  auto fd4 = [h](auto&& loss_at) {
    return (loss_at(-2 * h) - 8.0 * loss_at(-h) + 8.0 * loss_at(h) - loss_at(2 * h)) / (12.0 * h);
  };
  double worst = 0.0;
  auto note = [&](double fd, double an) {
    worst = std::max(worst, std::abs(fd - an) / std::max({1e-8, std::abs(fd), std::abs(an)}));
  };

  /* every encoder weight */
  const LocalGrad lg = local_loss_grad(enc, X, y, ctx);
  const Eigen::VectorXd an = detail_fml::flat_grad(lg.grad);
  const Eigen::VectorXd flat = enc.to_flat();
  for (Eigen::Index i = 0; i < flat.size(); ++i) {
    note(fd4([&](double d_) {
           EncoderParams p = enc;
           Eigen::VectorXd f = flat;
           f(i) += d_;
           p.from_flat(f);
           return local_loss_grad(p, X, y, ctx).loss;
         }),
         an(i));
  }

  /* every server weight: classifier matrix, bias, attention heads */
  const ServerGrad sg = server_loss_grad(server, hs, zs, y);
  auto bump = [&](auto&& setter, double analytic) {
    note(fd4([&](double d_) {
           ServerParams s = server;
           setter(s, d_);
           return server_loss_grad(s, hs, zs, y).loss;
         }),
         analytic);
  };
  for (Eigen::Index r = 0; r < server.Wd.rows(); ++r)
    for (Eigen::Index col = 0; col < server.Wd.cols(); ++col)
      bump([&](ServerParams& s, double d_) { s.Wd(r, col) += d_; }, sg.dWd(r, col));
  for (Eigen::Index r = 0; r < server.bd.size(); ++r)
    bump([&](ServerParams& s, double d_) { s.bd(r) += d_; }, sg.dbd(r));
  for (int m = 0; m < M; ++m) {
    const auto mi = static_cast<std::size_t>(m);
    for (Eigen::Index r = 0; r < server.heads[mi].wa.size(); ++r)
      bump([&](ServerParams& s, double d_) { s.heads[mi].wa(r) += d_; }, sg.dwa[mi](r));
    bump([&](ServerParams& s, double d_) { s.heads[mi].ba += d_; }, sg.dba[mi]);
  }
  return worst;
}

void check_gradients() {
  Criterion c(7, "manual backprop matches central differences on 20 draws");
  try {
    double worst = 0.0;
    for (std::uint64_t draw = 1; draw <= 20; ++draw) {
      worst = std::max(worst, gradcheck_draw(draw));
    }
    c.finish(worst <= 1e-5, "worst relative error " + num(worst), 30.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 8: fused model beats both single-view models --------------------- */

void check_multimodal(AuditAgg&) {
  Criterion c(8, "fused training beats each single view by 2+ points, IID and non-IID");
  try {
    ScenarioConfig cfg = default_scenario();
    cfg.num_uavs = 12;
    cfg.num_modalities = 2;
    cfg.num_rounds = 30;
    cfg.samples_per_uav.assign(12, 120.0);
    cfg.cycles_per_sample.assign(12, 1.0e6);
    cfg.fl.probe_set_size = 128;

    ScenarioConfig uni = cfg;
    uni.num_modalities = 1;

    bool alpha_ok = true;
    bool margins_ok = true;
    std::string detail;
    for (const bool iid : {true, false}) {
      double fused = 0.0, view0 = 0.0, view1 = 0.0;
      for (std::uint64_t seed = 1; seed <= 5; ++seed) {
        const TrainingResult mm = run_federated_training(cfg, seed, iid);
        fused += mm.final_accuracy;
        for (const auto& r : mm.rounds) {
          double s = 0.0;
          for (double a : r.alpha) s += a;
          if (std::abs(s - 1.0) > 1e-9) alpha_ok = false;
        }
        view0 += run_federated_training(uni, seed, iid, {0}).final_accuracy;
        view1 += run_federated_training(uni, seed, iid, {1}).final_accuracy;
      }
      fused /= 5.0;
      view0 /= 5.0;
      view1 /= 5.0;
      if (fused < std::max(view0, view1) + 0.02) margins_ok = false;
      detail += std::string(iid ? "iid" : "dirichlet") + " fused " + num(fused) + " vs views " +
                num(view0) + "/" + num(view1) + "; ";
    }
    if (!alpha_ok) detail += "attention weights do not sum to 1; ";
    c.finish(margins_ok && alpha_ok, detail + "5 seeds per setting", 300.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 9: closed-form rate bound pins and monotonicity ------------------ */

void check_bound_formula() {
  Criterion c(9, "rate bound matches its pinned value and is monotone");
  try {
    const BoundInputs def;
    const double pin = 0.26694916666666668;
    const double got = convergence_rate_bound(def);
    bool ok = std::abs(got - pin) <= 1e-12 * pin;
    std::string detail = "pin error " + num(std::abs(got - pin) / pin);

    Rng rng(901, 1);
    int checked = 0;
    for (int trial = 0; trial < 1000 && ok; ++trial) {
      BoundInputs in;
      in.L = rng.uniform(0.1, 5.0);
      in.sigma = rng.uniform(0.0, 3.0);
      in.B = 1 + static_cast<int>(rng.next_below(128));
      in.U = 1 + static_cast<int>(rng.next_below(20));
      in.J = 1 + static_cast<int>(rng.next_below(30));
      in.K = 1 + static_cast<int>(rng.next_below(500));
      in.eta = rng.uniform(1e-4, 0.5);
      in.M = 1 + static_cast<int>(rng.next_below(4));
      in.gaps.assign(static_cast<std::size_t>(in.M), 0.0);
      for (auto& g : in.gaps) g = rng.uniform(0.0, 10.0);

      BoundInputs more_k = in;
      more_k.K += 1 + static_cast<int>(rng.next_below(200));
      if (convergence_rate_bound(more_k) > convergence_rate_bound(in)) {
        ok = false;
        detail = "bound grew with extra rounds";
      }
      BoundInputs more_u = in;
      more_u.U += 1 + static_cast<int>(rng.next_below(10));
      if (bound_noise_term1(more_u) > bound_noise_term1(in) ||
          bound_noise_term2(more_u) > bound_noise_term2(in)) {
        ok = false;
        detail = "noise terms grew with extra UAVs";
      }
      ++checked;
    }
    if (ok) detail += ", monotone on " + std::to_string(checked) + " random inputs";
    c.finish(ok, detail, 5.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

/* ---- 10: byte-identical reruns through the CLI ------------------------ */

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  if (!f) throw DataError("missing output file " + p.string());
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void check_determinism(const std::string& cli, const fs::path& work) {
  Criterion c(10, "optimize and train reruns produce byte-identical CSVs");
  try {
    bool ok = true;
    std::string detail;

    auto run = [&](const std::string& args, const fs::path& out) {
      const std::string cmd =
          "\"" + cli + "\" " + args + " --out \"" + out.string() + "\" > /dev/null 2>&1";
      if (std::system(cmd.c_str()) != 0) throw SolverError("CLI exited nonzero: " + args);
    };

    const fs::path oa = work / "det_opt_a", ob = work / "det_opt_b";
    run("optimize --mode t-opt --seed 3", oa);
    run("optimize --mode t-opt --seed 3", ob);
    for (const char* f : {"trace.csv", "solution.csv", "latency.csv"}) {
      if (slurp(oa / f) != slurp(ob / f)) {
        ok = false;
        detail += std::string(f) + " differs; ";
      }
    }

    const fs::path ta = work / "det_train_a", tb = work / "det_train_b";
    run("train --case 3 --iid --seed 7", ta);
    run("train --case 3 --iid --seed 7", tb);
    if (slurp(ta / "training.csv") != slurp(tb / "training.csv")) {
      ok = false;
      detail += "training.csv differs; ";
    }

    if (ok) detail = "trace, solution, latency and training CSVs identical across reruns";
    c.finish(ok, detail, 0.0);
  } catch (const std::exception& e) {
    c.fail(std::string("exception: ") + e.what());
  }
}

}  // namespace

int main(int argc, char** argv) {
  if (argc < 2) {
    std::cerr << "usage: acceptance <path-to-cli-binary>\n";
    return 2;
  }
  const std::string cli = argv[1];
  if (!fs::exists(cli)) {
    std::cerr << "CLI binary not found: " << cli << "\n";
    return 2;
  }
  const fs::path work = fs::temp_directory_path() / "uavfml_acceptance";
  std::error_code ec;
  fs::remove_all(work, ec);
  fs::create_directories(work);

  AuditAgg agg;
  check_surrogates();
  check_bcd_monotone(agg);
  check_baseline_ordering(agg);
  check_oracle(agg);
  check_feasibility_audit(agg);
  check_sweeps(cli, work);
  check_gradients();
  check_multimodal(agg);
  check_bound_formula();
  check_determinism(cli, work);

  if (g_failures > 0) {
    std::cout << g_failures << " criterion check(s) failed\n";
    return 1;
  }
  std::cout << "all 10 criteria passed\n";
  return 0;
}
