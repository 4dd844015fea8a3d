/* Batch driver: optimization, sweeps, federated training, bound reports and
 * oracle cross-checks. Emits CSV files a plotting pipeline can consume. */

#include <CLI11.hpp>
#include <json.hpp>

#include <atomic>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "uavfml/convergence.hpp"
#include "uavfml/fml/training.hpp"
#include "uavfml/latency.hpp"
#include "uavfml/sca/bcd.hpp"
#include "uavfml/sca/oracle.hpp"
#include "uavfml/scenario.hpp"
#include "uavfml/version.hpp"

namespace {

using uavfml::BaselineMode;
using uavfml::ScenarioConfig;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

struct RunTimer {
  std::chrono::steady_clock::time_point t0 = std::chrono::steady_clock::now();
  double seconds() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  }
};

/* manifest lands before any result file so a crash is self-evident */
void write_manifest(const std::string& out_dir, const std::string& command,
                    const std::string& config, std::uint64_t seed, const std::string& mode,
                    double duration_s) {
  nlohmann::json j;
  j["command"] = command;
  j["config"] = config.empty() ? "default" : config;
  j["seed"] = seed;
  j["mode"] = mode;
  j["out"] = out_dir;
  j["tool_version"] = uavfml::kToolVersion;
  if (duration_s >= 0.0) {
    j["duration_s"] = duration_s;
  } else {
    j["duration_s"] = nullptr;
  }
  std::ofstream f(out_dir + "/manifest.json", std::ios::binary);
  if (!f) throw uavfml::DataError("cannot write manifest in " + out_dir);
  f << j.dump(2) << "\n";
}

ScenarioConfig load_config(const std::string& path, std::uint64_t seed) {
  ScenarioConfig cfg = path.empty() ? uavfml::default_scenario() : uavfml::load_scenario_file(path);
  if (seed != 0) cfg = uavfml::perturbed_scenario(cfg, seed);
  const auto report = uavfml::validate(cfg);
  if (!report.ok()) throw uavfml::ConfigError("invalid scenario:\n" + report.summary());
  return cfg;
}

std::ofstream open_csv(const std::string& out_dir, const std::string& name) {
  std::ofstream f(out_dir + "/" + name, std::ios::binary);
  if (!f) throw uavfml::DataError("cannot write " + name + " in " + out_dir);
  return f;
}

void write_trace_csv(std::ofstream f, const uavfml::BcdResult& res) {
  f << "iteration,objective_s,violation\n";
  for (const auto& row : res.trace) {
    f << row.iteration << "," << fmt(row.objective_s) << "," << fmt(row.violation) << "\n";
  }
}

void write_solution_csv(std::ofstream f, const uavfml::DecisionVector& d) {
  f << "variable,k,c,u,t,value\n";
  for (int k = 0; k < d.K; ++k) {
    for (int c = 0; c < d.C; ++c)
      for (int u = 0; u < d.U; ++u)
        f << "x," << k << "," << c << "," << u << ",," << fmt(d.x(k, c, u)) << "\n";
    for (int u = 0; u < d.U; ++u) {
      f << "p_se," << k << ",," << u << ",," << fmt(d.p_se[d.ku(k, u)]) << "\n";
      f << "f_u," << k << ",," << u << ",," << fmt(d.f_u[d.ku(k, u)]) << "\n";
      for (int t = 0; t < d.T; ++t) {
        const std::size_t i = d.kut(k, u, t);
        f << "traj_x," << k << ",," << u << "," << t << "," << fmt(d.traj_x[i]) << "\n";
        f << "traj_y," << k << ",," << u << "," << t << "," << fmt(d.traj_y[i]) << "\n";
        f << "p_cm," << k << ",," << u << "," << t << "," << fmt(d.p_cm[i]) << "\n";
      }
    }
    f << "p_bs," << k << ",,,," << fmt(d.p_bs[static_cast<std::size_t>(k)]) << "\n";
    f << "f_bs," << k << ",,,," << fmt(d.f_bs[static_cast<std::size_t>(k)]) << "\n";
  }
}

void write_latency_csv(std::ofstream f, const ScenarioConfig& cfg,
                       const uavfml::DecisionVector& d) {
  f << "round,uav,t_sense,t_train,t_embed_up,t_model_up,t_bs_train,t_download,uav_total,"
       "round_latency\n";
  for (int k = 0; k < d.K; ++k) {
    const double rl = uavfml::round_latency(cfg, d, k);
    for (int u = 0; u < d.U; ++u) {
      const auto b = uavfml::round_breakdown(cfg, d, k, u).latency;
      f << k << "," << u << "," << fmt(b.t_sense) << "," << fmt(b.t_train) << ","
        << fmt(b.t_embed_up) << "," << fmt(b.t_model_up) << "," << fmt(b.t_bs_train) << ","
        << fmt(b.t_download) << "," << fmt(b.total()) << "," << fmt(rl) << "\n";
    }
  }
}

int cmd_optimize(const std::string& config, const std::string& mode_s, std::uint64_t seed,
                 const std::string& out) {
  RunTimer timer;
  const BaselineMode mode = uavfml::parse_mode(mode_s);
  const ScenarioConfig cfg = load_config(config, seed);
  std::filesystem::create_directories(out);
  write_manifest(out, "optimize", config, seed, mode_s, -1.0);

  const uavfml::BcdResult res = uavfml::bcd_optimize(cfg, mode);
  write_trace_csv(open_csv(out, "trace.csv"), res);
  write_solution_csv(open_csv(out, "solution.csv"), res.decision);
  write_latency_csv(open_csv(out, "latency.csv"), cfg, res.decision);
  write_manifest(out, "optimize", config, seed, mode_s, timer.seconds());
  std::cout << "objective_s=" << fmt(res.objective) << " iters=" << res.outer_iters
            << (res.converged ? " converged" : " max-iters") << "\n";
  return 0;
}

/* the eight scenario knobs the sweep command exposes */
void apply_sweep_param(ScenarioConfig& cfg, const std::string& name, double v) {
  if (name == "p_se_max") {
    cfg.p_se_max = v;
  } else if (name == "p_cm_max") {
    cfg.p_cm_max = v;
  } else if (name == "p_bs_max") {
    cfg.p_bs_max = v;
  } else if (name == "f_u_max") {
    cfg.f_u_max = v;
  } else if (name == "f_bs_max") {
    cfg.f_bs_max = v;
  } else if (name == "e_max") {
    cfg.e_max = v;
  } else if (name == "bandwidth") {
    cfg.bandwidth_uav = v;
    cfg.bandwidth_bs = v;
  } else if (name == "s_l" || name == "model_payload") {
    cfg.model_payload = v;
  } else {
    throw uavfml::ConfigError("unknown sweep parameter '" + name + "'");
  }
  const auto report = uavfml::validate(cfg);
  if (!report.ok()) throw uavfml::ConfigError("invalid sweep value:\n" + report.summary());
}

std::vector<double> parse_range(const std::string& spec) {
  const auto a = spec.find(':');
  const auto b = spec.rfind(':');
  if (a == std::string::npos || b == a) {
    throw uavfml::ConfigError("range must be min:max:steps, got '" + spec + "'");
  }
  double lo = 0.0, hi = 0.0;
  int n = 0;
  try {
    lo = std::stod(spec.substr(0, a));
    hi = std::stod(spec.substr(a + 1, b - a - 1));
    n = std::stoi(spec.substr(b + 1));
  } catch (const std::exception&) {
    throw uavfml::ConfigError("range must be min:max:steps, got '" + spec + "'");
  }
  if (n < 1) throw uavfml::ConfigError("range needs at least one step");
  std::vector<double> vals;
  for (int i = 0; i < n; ++i) {
    vals.push_back(n == 1 ? lo : lo + (hi - lo) * i / (n - 1));
  }
  return vals;
}

int worker_pool_size(std::size_t jobs) {
  unsigned n = std::thread::hardware_concurrency();
  if (const char* env = std::getenv("UAVFML_THREADS")) {
    const long v = std::strtol(env, nullptr, 10);
    if (v >= 1) n = static_cast<unsigned>(v);
  }
  if (n < 1) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, jobs));
}

int cmd_sweep(const std::string& config, const std::string& param, const std::string& range,
              const std::string& mode_s, std::uint64_t seed, const std::string& out) {
  RunTimer timer;
  const ScenarioConfig base = load_config(config, seed);
  const std::vector<double> values = parse_range(range);
  std::vector<BaselineMode> modes;
  if (mode_s.empty() || mode_s == "all") {
    modes = {BaselineMode::T_OPT, BaselineMode::UAV_SS_PC, BaselineMode::UAV_T_RA,
             BaselineMode::BS_RA};
  } else {
    modes = {uavfml::parse_mode(mode_s)};
  }
  {
    /* reject bad parameter names before spawning workers */
    ScenarioConfig probe = base;
    apply_sweep_param(probe, param, values.front());
  }
  std::filesystem::create_directories(out);
  write_manifest(out, "sweep", config, seed, mode_s.empty() ? "all" : mode_s, -1.0);

  std::vector<std::vector<double>> table(values.size(),
                                         std::vector<double>(modes.size(), 0.0));
  std::atomic<std::size_t> next{0};
  std::vector<std::string> errors(values.size());
  auto work = [&]() {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= values.size()) return;
      try {
        ScenarioConfig cfg = base;
        apply_sweep_param(cfg, param, values[i]);
        for (std::size_t m = 0; m < modes.size(); ++m) {
          table[i][m] = uavfml::bcd_optimize(cfg, modes[m]).objective;
        }
      } catch (const std::exception& e) {
        errors[i] = e.what();
      }
    }
  };
  const int pool = worker_pool_size(values.size());
  std::vector<std::thread> threads;
  for (int i = 0; i < pool; ++i) threads.emplace_back(work);
  for (auto& t : threads) t.join();
  for (const auto& e : errors) {
    if (!e.empty()) throw uavfml::SolverError("sweep point failed: " + e);
  }

  std::ofstream f = open_csv(out, "sweep.csv");
  f << "param_value";
  for (const auto m : modes) {
    std::string name = uavfml::to_string(m);
    for (auto& ch : name) {
      if (ch == '-') ch = '_';
    }
    f << "," << name;
  }
  f << "\n";
  for (std::size_t i = 0; i < values.size(); ++i) {
    f << fmt(values[i]);
    for (std::size_t m = 0; m < modes.size(); ++m) f << "," << fmt(table[i][m]);
    f << "\n";
  }
  f.close();
  write_manifest(out, "sweep", config, seed, mode_s.empty() ? "all" : mode_s, timer.seconds());
  return 0;
}

int cmd_train(const std::string& config, int training_case, bool noniid, std::uint64_t seed,
              const std::string& out) {
  RunTimer timer;
  ScenarioConfig cfg = load_config(config, 0);
  std::vector<int> views;
  if (training_case == 1 || training_case == 2) {
    cfg.num_modalities = 1;
    views = {training_case - 1};
  } else if (training_case != 3) {
    throw uavfml::ConfigError("case must be 1, 2 or 3");
  }
  const auto report = uavfml::validate(cfg);
  if (!report.ok()) throw uavfml::ConfigError("invalid scenario:\n" + report.summary());
  std::filesystem::create_directories(out);
  write_manifest(out, "train", config, seed, "case" + std::to_string(training_case), -1.0);

  const uavfml::TrainingResult res =
      uavfml::run_federated_training(cfg, seed, !noniid, views);

  std::ofstream f = open_csv(out, "training.csv");
  f << "round,global_loss,accuracy";
  for (int m = 1; m <= cfg.num_modalities; ++m) f << ",alpha_" << m;
  f << "\n";
  for (std::size_t k = 0; k < res.rounds.size(); ++k) {
    const auto& r = res.rounds[k];
    f << k << "," << fmt(r.global_loss) << "," << fmt(r.accuracy);
    for (double a : r.alpha) f << "," << fmt(a);
    f << "\n";
  }
  f.close();
  write_manifest(out, "train", config, seed, "case" + std::to_string(training_case),
                 timer.seconds());
  std::cout << "final_accuracy="
            << fmt(res.rounds.empty() ? 0.0 : res.rounds.back().accuracy) << "\n";
  return 0;
}

int cmd_bound(const std::string& config, std::uint64_t seed,
              const std::vector<std::string>& overrides) {
  ScenarioConfig cfg = load_config(config, 0);
  const uavfml::TrainingResult run = uavfml::run_federated_training(cfg, seed, true);

  uavfml::BoundInputs in;
  in.B = cfg.fl.batch_size;
  in.U = cfg.uavs_per_cluster();
  in.J = cfg.local_iters;
  in.K = std::max(cfg.num_rounds, 1);
  in.eta = cfg.fl.learning_rate;
  in.M = cfg.num_modalities;
  in.gaps.assign(static_cast<std::size_t>(in.M), 1.0);
  double lambda_hat = 1.0;
  if (!run.grad_snapshots.empty()) {
    lambda_hat = uavfml::estimate_lambda(run.grad_snapshots);
    in.lambda = lambda_hat;
    in.sigma = std::sqrt(uavfml::estimate_sigma2(run.sigma_samples, cfg.fl.batch_size));
    if (run.round_params.size() >= 2) {
      in.L = uavfml::estimate_smoothness(run.round_params, run.round_grads);
    }
  }

  for (const auto& kv : overrides) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) throw uavfml::ConfigError("override must be key=value: " + kv);
    const std::string key = kv.substr(0, eq);
    const std::string val = kv.substr(eq + 1);
    try {
      if (key == "L") {
        in.L = std::stod(val);
      } else if (key == "sigma") {
        in.sigma = std::stod(val);
      } else if (key == "C1") {
        in.C1 = std::stod(val);
      } else if (key == "B") {
        in.B = std::stoi(val);
      } else if (key == "U") {
        in.U = std::stoi(val);
      } else if (key == "J") {
        in.J = std::stoi(val);
      } else if (key == "K") {
        in.K = std::stoi(val);
      } else if (key == "eta") {
        in.eta = std::stod(val);
      } else if (key == "M") {
        in.M = std::stoi(val);
        in.gaps.assign(static_cast<std::size_t>(std::max(in.M, 0)), in.gaps.empty() ? 1.0 : in.gaps.front());
      } else if (key == "gap") {
        in.gaps.assign(in.gaps.size(), std::stod(val));
      } else if (key == "lambda") {
        in.lambda = std::stod(val);
      } else if (key == "mu") {
        in.mu = std::stod(val);
      } else {
        throw uavfml::ConfigError("unknown override key '" + key + "'");
      }
    } catch (const uavfml::ConfigError&) {
      throw;
    } catch (const std::exception&) {
      throw uavfml::ConfigError("bad override value in '" + kv + "'");
    }
  }

  const double bound = uavfml::convergence_rate_bound(in);
  const auto rep = uavfml::bound_vs_empirical(run.empirical_grad_sq, bound);
  std::cout << "K,J,U,M,B,eta,bound,empirical_mean_grad_sq,lambda_hat\n"
            << in.K << "," << in.J << "," << in.U << "," << in.M << "," << in.B << ","
            << fmt(in.eta) << "," << fmt(bound) << "," << fmt(rep.empirical_mean_grad_sq) << ","
            << fmt(lambda_hat) << "\n";
  return 0;
}

int cmd_oracle_check(std::uint64_t seed, double rel_tol, int max_newton) {
  bool all_ok = true;
  for (int i = 0; i < 5; ++i) {
    const ScenarioConfig cfg = uavfml::tiny_scenario(seed + static_cast<std::uint64_t>(i));
    uavfml::BcdOptions opts;
    opts.rel_tol = rel_tol;
    if (max_newton > 0) opts.solver.max_inner = max_newton;
    const uavfml::BcdResult res = uavfml::bcd_optimize(cfg, BaselineMode::T_OPT, opts);
    const uavfml::OracleResult oracle = uavfml::brute_force_oracle(cfg);
    const double gap = std::abs(res.objective - oracle.objective) / oracle.objective;
    const bool ok = gap <= 0.01;
    all_ok = all_ok && ok;
    std::cout << "instance=" << i << " bcd=" << fmt(res.objective)
              << " oracle=" << fmt(oracle.objective) << " rel_gap=" << fmt(gap) << " "
              << (ok ? "ok" : "FAIL") << "\n";
  }
  return all_ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"UAV-assisted multimodal federated learning toolkit"};
  app.require_subcommand(1);

  std::string config, out = "out", mode = "t-opt", param, range;
  std::uint64_t seed = 0;
  int training_case = 3;
  bool noniid = false;
  double oracle_rel_tol = 1e-4;
  std::vector<std::string> overrides;

  auto* opt = app.add_subcommand("optimize", "run the block descent on one scenario");
  opt->add_option("--config", config, "scenario JSON path (default scenario if omitted)");
  opt->add_option("--mode", mode, "t-opt | uav-ss-pc | uav-t-ra | bs-ra");
  opt->add_option("--seed", seed, "0 keeps the base scenario; else perturbs it");
  opt->add_option("--out", out, "output directory");

  std::string sweep_mode;
  auto* swp = app.add_subcommand("sweep", "optimize across a parameter range");
  swp->add_option("--config", config, "scenario JSON path");
  swp->add_option("--param", param, "p_se_max p_cm_max p_bs_max f_u_max f_bs_max e_max bandwidth s_l")
      ->required();
  swp->add_option("--range", range, "min:max:steps")->required();
  swp->add_option("--mode", sweep_mode, "single mode, or all when omitted");
  swp->add_option("--seed", seed, "0 keeps the base scenario; else perturbs it");
  swp->add_option("--out", out, "output directory");

  auto* trn = app.add_subcommand("train", "run federated training");
  trn->add_option("--config", config, "scenario JSON path");
  trn->add_option("--case", training_case, "1: first view only, 2: second view only, 3: multimodal");
  trn->add_flag("--noniid", noniid, "dirichlet label split (default iid)");
  trn->add_flag("--iid", "iid label split (default)");
  trn->add_option("--seed", seed, "data and init seed");
  trn->add_option("--out", out, "output directory");

  auto* bnd = app.add_subcommand("bound", "print the convergence bound report CSV");
  bnd->add_option("--config", config, "scenario JSON path");
  bnd->add_option("--seed", seed, "probe training seed");
  bnd->add_option("--set", overrides, "bound input overrides key=value (L sigma C1 B U J K eta M gap lambda mu)");

  int oracle_max_newton = 0;
  auto* orc = app.add_subcommand("oracle-check", "grid oracle vs block descent on tiny instances");
  orc->add_option("--seed", seed, "base instance seed");
  orc->add_option("--rel-tol", oracle_rel_tol, "descent convergence tolerance");
  orc->add_option("--max-newton", oracle_max_newton,
                  "cap Newton steps per barrier stage (negative control; 0 keeps the default)");

  try {
    app.parse(argc, argv);
    if (opt->parsed()) return cmd_optimize(config, mode, seed, out);
    if (swp->parsed()) return cmd_sweep(config, param, range, sweep_mode, seed, out);
    if (trn->parsed()) return cmd_train(config, training_case, noniid, seed, out);
    if (bnd->parsed()) return cmd_bound(config, seed, overrides);
    if (orc->parsed()) {
      return cmd_oracle_check(seed == 0 ? 1 : seed, oracle_rel_tol, oracle_max_newton);
    }
    return 2;
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const uavfml::ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const uavfml::InfeasibleError& e) {
    std::cerr << "infeasible: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
}
