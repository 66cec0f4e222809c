// Command-line harness: single solves, benchmark suites, feedback and
// perturbation studies. Emits CSV traces plus a JSON manifest with content
// digests so runs are reproducible byte for byte per (config, seed).

#include <chrono>
#include <cstdarg>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <nlohmann/json.hpp>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "trajopt/feedback.hpp"
#include "trajopt/problems.hpp"
#include "trajopt/solvers.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace trajopt;

namespace {

constexpr const char* kArtifactVersion = "1.0";
constexpr int kCsvSchemaVersion = 1;

std::string num(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

std::string fnv1a_digest(const std::string& bytes) {
  uint64_t h = 1469598103934665603ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  char buf[32];
  std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx", static_cast<unsigned long long>(h));
  return buf;
}

// Accumulates CSV text in memory so the digest and the file share one buffer.
struct CsvFile {
  std::string name;
  std::string text;

  explicit CsvFile(std::string file, const std::string& header) : name(std::move(file)) {
    text = "# schema_version " + std::to_string(kCsvSchemaVersion) + "\n" + header + "\n";
  }
  void row(const std::vector<std::string>& cells) {
    for (size_t i = 0; i < cells.size(); ++i) {
      if (i) text += ',';
      text += cells[i];
    }
    text += '\n';
  }
};

struct OutputSet {
  fs::path dir;
  std::vector<CsvFile> files;

  CsvFile& add(const std::string& name, const std::string& header) {
    files.emplace_back(name, header);
    return files.back();
  }

  void write_all(const json& manifest_extra) {
    fs::create_directories(dir);
    json outputs = json::array();
    for (const auto& f : files) {
      std::ofstream os(dir / f.name, std::ios::binary);
      os << f.text;
      outputs.push_back({{"file", f.name}, {"digest", fnv1a_digest(f.text)}});
    }
    json manifest = manifest_extra;
    manifest["artifact_version"] = kArtifactVersion;
    manifest["outputs"] = outputs;
    const auto now = std::chrono::system_clock::now();
    manifest["timestamp_unix"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    std::ofstream os(dir / "manifest.json", std::ios::binary);
    os << manifest.dump(2) << "\n";
  }
};

json solver_config_json(const SolverConfig& cfg, const std::string& method,
                        const std::string& scheme) {
  return json{{"method", method},
              {"reg_scheme", scheme},
              {"max_iters", cfg.max_iters},
              {"tol", cfg.tol},
              {"alpha0", cfg.alpha0},
              {"backtrack_factor", cfg.backtrack_factor},
              {"alpha_min", cfg.alpha_min},
              {"alpha_switch", cfg.alpha_switch},
              {"accept_threshold", cfg.accept_threshold},
              {"seed", cfg.seed}};
}

struct ProblemArgs {
  std::string problem = "pendulum";
  std::string config_path;
  int start_point = 0;  // 0: random controls from the seed
  uint64_t seed = 0;

  BenchmarkSpec spec() const {
    if (!config_path.empty()) {
      std::ifstream is(config_path);
      if (!is) throw InputError("cannot open config file: " + config_path);
      json j;
      is >> j;
      return j.get<BenchmarkSpec>();
    }
    return default_spec(problem);
  }

  std::vector<VectorXd> initial_controls(const BenchmarkSpec& s, const Problem& p) const {
    if (start_point > 0) return starting_controls(s, start_point);
    return random_controls(p, seed, default_u_scale(s.name));
  }
};

void add_problem_flags(CLI::App* cmd, ProblemArgs& a) {
  cmd->add_option("--problem", a.problem,
                  "benchmark name (pendulum, cartpole, tp1, tp2, tp3, tp4, lqr_test)");
  cmd->add_option("--config", a.config_path, "benchmark config file (JSON, overrides --problem)");
  cmd->add_option("--start-point", a.start_point, "tabulated starting point 1..5 (tp3/tp4)");
  cmd->add_option("--seed", a.seed, "seed for random initial controls and noise");
}

struct SolverArgs {
  std::string method = "ilqr";
  std::string reg_scheme = "none";
  SolverConfig base;

  SolverConfig config() const {
    SolverConfig cfg = base;
    cfg.method = method_from_string(method);
    cfg.reg.scheme = reg_scheme_from_string(reg_scheme);
    return cfg;
  }
};

void add_solver_flags(CLI::App* cmd, SolverArgs& a) {
  cmd->add_option("--method", a.method, "ilqr | ddp | sn | mixed | hybrid");
  cmd->add_option("--reg-scheme", a.reg_scheme, "none | lm_shift | adaptive_shift");
  cmd->add_option("--max-iters", a.base.max_iters, "iteration budget");
  cmd->add_option("--tol", a.base.tol, "convergence tolerance");
  cmd->add_option("--alpha0", a.base.alpha0, "initial line-search step");
  cmd->add_option("--backtrack-factor", a.base.backtrack_factor, "line-search shrink factor");
  cmd->add_option("--alpha-switch", a.base.alpha_switch, "hybrid switch threshold");
}

fs::path default_out_root() {
  if (const char* env = std::getenv("TRAJOPT_OUT_DIR")) return fs::path(env);
  return fs::path("trajopt-out");
}

void write_trajectory_csv(OutputSet& out, const Problem& prob, const Trajectory& traj) {
  std::string header = "t";
  for (int i = 0; i < prob.n; ++i) header += ",x" + std::to_string(i);
  for (int j = 0; j < prob.m; ++j) header += ",u" + std::to_string(j);
  auto& csv = out.add("trajectory.csv", header);
  for (int t = 0; t <= prob.T; ++t) {
    std::vector<std::string> cells{std::to_string(t)};
    for (int i = 0; i < prob.n; ++i) cells.push_back(num(traj.states[t](i)));
    for (int j = 0; j < prob.m; ++j)
      cells.push_back(t < prob.T ? num(traj.controls[t](j)) : std::string());
    csv.row(cells);
  }
}

int run_solve(const ProblemArgs& pa, const SolverArgs& sa, const fs::path& out_dir) {
  const BenchmarkSpec spec = pa.spec();
  const Problem prob = build_benchmark(spec);
  SolverConfig cfg = sa.config();
  cfg.seed = pa.seed;
  const auto u0 = pa.initial_controls(spec, prob);

  const SolveReport rep = solve(prob, u0, cfg);

  OutputSet out;
  out.dir = out_dir;
  auto& iters = out.add("iterations.csv",
                        "iter,J,alpha,dJ_pred,dJ_actual,J_plus_dJ_pred,min_quu_eig,reg_shift,"
                        "backtracks");
  for (const auto& it : rep.iterations)
    iters.row({std::to_string(it.iter), num(it.J), num(it.alpha), num(it.dj_pred),
               num(it.dj_actual), num(it.J + it.dj_pred_full), num(it.min_quu_eig),
               num(it.reg_shift), std::to_string(it.backtracks)});

  // per-step control-Hessian spectrum of every backward-pass flavor at the
  // initial nominal (iteration 0)
  auto& quu = out.add("quu_profile.csv", "t,quu_min_eig_ilqr,quu_min_eig_ddp,quu_min_eig_sn");
  try {
    const auto traj0 = rollout(prob, u0);
    const auto model = linearize(prob, traj0, DerivOrder::Second);
    const int T = prob.T;
    std::vector<std::vector<std::string>> cols;
    for (Method m : {Method::ILQR, Method::DDP, Method::SN}) {
      std::vector<std::string> col(T, "nan");
      try {
        const auto sch = backward_pass(model, m);
        for (int t = 0; t < T; ++t) col[t] = num(sch.quu_min_eig[t]);
      } catch (const BackwardPassError&) {
        // leave nan: the pass could not be completed without regularization
      }
      cols.push_back(std::move(col));
    }
    for (int t = 0; t < T; ++t)
      quu.row({std::to_string(t), cols[0][t], cols[1][t], cols[2][t]});
  } catch (const NumericError&) {
    // divergent initial rollout: no profile rows
  }

  if (!rep.final_trajectory.states.empty())
    write_trajectory_csv(out, prob, rep.final_trajectory);

  json manifest{{"command", "solve"},
                {"status", to_string(rep.status)},
                {"final_cost", rep.final_trajectory.cost},
                {"accepted_iterations", rep.accepted_iterations()},
                {"hybrid_switch_iter", rep.hybrid_switch_iter},
                {"seed", pa.seed},
                {"start_point", pa.start_point},
                {"benchmark", spec},
                {"solver_config", solver_config_json(cfg, sa.method, sa.reg_scheme)}};
  out.write_all(manifest);

  const bool hard_failure =
      rep.status == SolveStatus::Stalled || rep.status == SolveStatus::Diverged;
  std::printf("%s: status=%s J=%s iters=%d -> %s\n", spec.name.c_str(),
              to_string(rep.status).c_str(), num(rep.final_trajectory.cost).c_str(),
              rep.accepted_iterations(), out.dir.string().c_str());
  return hard_failure ? 1 : 0;
}

int run_suite(const std::string& suite, const std::vector<std::string>& methods,
              const std::string& reg_scheme, uint64_t seed, const fs::path& out_dir) {
  struct Member {
    BenchmarkSpec spec;
    int start_point;
  };
  std::vector<Member> members;
  auto add_points = [&members](BenchmarkSpec spec) {
    for (int p = 1; p <= 5; ++p) members.push_back({spec, p});
  };
  if (suite == "tp3-small" || suite == "all") add_points(default_spec("tp3"));
  if (suite == "tp3-large" || suite == "all") {
    auto s = default_spec("tp3");
    s.T = 100;
    s.tp_mu = 1.0 / 200.0;
    add_points(s);
  }
  if (suite == "tp4" || suite == "all") add_points(default_spec("tp4"));
  if (members.empty()) throw CLI::ValidationError("--suite", "unknown suite: " + suite);

  OutputSet out;
  out.dir = out_dir;
  auto& csv = out.add("suite.csv",
                      "problem,start_point,method,status,iterations,final_J,regularization,"
                      "wall_time_s");
  for (const auto& member : members) {
    const Problem prob = build_benchmark(member.spec);
    const std::string label =
        member.spec.name + (member.spec.T == 100 && member.spec.name == "tp3" ? "-large" : "");
    for (const auto& method : methods) {
      SolverConfig cfg;
      cfg.method = method_from_string(method);
      cfg.reg.scheme = reg_scheme_from_string(reg_scheme);
      cfg.max_iters = 100;
      cfg.seed = seed;
      const auto t0 = std::chrono::steady_clock::now();
      std::string status = "error";
      int iters = 0;
      double J = std::numeric_limits<double>::quiet_NaN();
      try {
        const auto rep = solve(prob, starting_controls(member.spec, member.start_point), cfg);
        status = to_string(rep.status);
        iters = rep.accepted_iterations();
        J = rep.final_trajectory.cost;
      } catch (const std::exception&) {
        // a failed member is recorded, not fatal to the suite
      }
      const double secs =
          std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      csv.row({label, std::to_string(member.start_point), method, status,
               std::to_string(iters), num(J), reg_scheme, num(secs)});
      std::printf("%s point %d %s: %s iters=%d J=%s\n", label.c_str(), member.start_point,
                  method.c_str(), status.c_str(), iters, num(J).c_str());
    }
  }
  json manifest{{"command", "suite"},
                {"suite", suite},
                {"methods", methods},
                {"reg_scheme", reg_scheme},
                {"seed", seed}};
  out.write_all(manifest);
  return 0;
}

// Produces a tightly converged solution for the feedback studies.
SolveReport converge_for_feedback(const Problem& prob, const BenchmarkSpec& spec,
                                  const ProblemArgs& pa) {
  SolverConfig cfg;
  cfg.method = Method::DDP;
  cfg.tol = 1e-13;
  cfg.max_iters = 500;
  cfg.seed = pa.seed;
  return solve(prob, pa.initial_controls(spec, prob), cfg);
}

int run_feedback(const ProblemArgs& pa, const std::vector<double>& sigmas, int trials,
                 double envelope_sigma, int envelope_trials, const fs::path& out_dir) {
  const BenchmarkSpec spec = pa.spec();
  const Problem prob = build_benchmark(spec);
  const auto rep = converge_for_feedback(prob, spec, pa);
  if (rep.status != SolveStatus::Converged) {
    std::fprintf(stderr, "feedback: base solve did not converge (status %s)\n",
                 to_string(rep.status).c_str());
    return 1;
  }
  FeedbackPolicy policy;
  try {
    policy = neighboring_gains(prob, rep.final_trajectory);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "feedback: %s\n", e.what());
    return 1;
  }

  OutputSet out;
  out.dir = out_dir;
  auto& rates = out.add("success_vs_sigma.csv", "sigma,trials,successes,success_rate,seed");
  for (double sigma : sigmas) {
    const auto r = monte_carlo_stabilize(prob, policy, sigma, trials, pa.seed);
    rates.row({num(sigma), std::to_string(r.trials), std::to_string(r.successes),
               num(r.success_rate), std::to_string(r.seed)});
    std::printf("sigma=%s success_rate=%s\n", num(sigma).c_str(), num(r.success_rate).c_str());
  }

  const auto env = monte_carlo_stabilize(prob, policy, envelope_sigma, envelope_trials, pa.seed);
  auto& envelopes =
      out.add("envelopes.csv", "state_index,t,mean,stddev,lower_3sigma,upper_3sigma");
  for (int i = 0; i < prob.n; ++i)
    for (int t = 0; t <= prob.T; ++t)
      envelopes.row({std::to_string(i), std::to_string(t), num(env.mean[t](i)),
                     num(env.stddev[t](i)), num(env.mean[t](i) - 3.0 * env.stddev[t](i)),
                     num(env.mean[t](i) + 3.0 * env.stddev[t](i))});

  json manifest{{"command", "feedback"},
                {"seed", pa.seed},
                {"benchmark", spec},
                {"sigmas", sigmas},
                {"trials", trials},
                {"envelope_sigma", envelope_sigma},
                {"envelope_trials", envelope_trials},
                {"base_cost", rep.final_trajectory.cost},
                {"max_feedforward_norm", policy.max_feedforward_norm}};
  out.write_all(manifest);
  return 0;
}

int run_perturb(const ProblemArgs& pa, const std::vector<double>& alphas,
                const fs::path& out_dir) {
  const BenchmarkSpec spec = pa.spec();
  const Problem prob = build_benchmark(spec);
  const auto u0 = pa.initial_controls(spec, prob);
  const auto traj = rollout(prob, u0);
  const auto model = linearize(prob, traj, DerivOrder::Second);
  const auto sch = backward_pass(model, Method::SN);
  const auto tables = perturbation_study(prob, traj, model, sch, alphas);

  OutputSet out;
  out.dir = out_dir;
  auto& csv = out.add("perturbation.csv",
                      "alpha,step,err_linear,err_quadratic,err_recursive,truncated");
  for (const auto& table : tables) {
    for (const auto& row : table.rows)
      csv.row({num(table.alpha), std::to_string(row.step), num(row.err_linear),
               num(row.err_quadratic), num(row.err_recursive),
               table.truncated ? "1" : "0"});
    std::printf("alpha=%s max_recursive_error=%s%s\n", num(table.alpha).c_str(),
                num(table.max_recursive_error()).c_str(),
                table.truncated ? " (truncated)" : "");
  }
  json manifest{{"command", "perturb"},
                {"seed", pa.seed},
                {"benchmark", spec},
                {"alphas", alphas}};
  out.write_all(manifest);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"trajectory optimization benchmark harness"};
  app.require_subcommand(1);

  ProblemArgs pa_solve, pa_feedback, pa_perturb;
  SolverArgs sa;
  std::string out_override;

  auto* solve_cmd = app.add_subcommand("solve", "run one solver on one problem");
  add_problem_flags(solve_cmd, pa_solve);
  add_solver_flags(solve_cmd, sa);
  solve_cmd->add_option("--out", out_override, "output directory");

  std::string suite_name;
  std::vector<std::string> suite_methods;
  std::string suite_reg = "none";
  uint64_t suite_seed = 0;
  auto* suite_cmd = app.add_subcommand("suite", "run a benchmark suite");
  suite_cmd->add_option("--suite", suite_name, "tp3-small | tp3-large | tp4 | all")->required();
  suite_cmd->add_option("--methods", suite_methods, "solver methods to run");
  suite_cmd->add_option("--reg-scheme", suite_reg, "regularization for all members");
  suite_cmd->add_option("--seed", suite_seed, "seed recorded in the manifest");
  suite_cmd->add_option("--out", out_override, "output directory");

  std::vector<double> sigmas{0.0, 0.005, 0.01, 0.02, 0.05};
  int trials = 1000;
  double envelope_sigma = 0.02;
  int envelope_trials = 100;
  auto* feedback_cmd =
      app.add_subcommand("feedback", "closed-loop noise stabilization study");
  add_problem_flags(feedback_cmd, pa_feedback);
  feedback_cmd->add_option("--sigmas", sigmas, "noise levels to sweep");
  feedback_cmd->add_option("--trials", trials, "trials per noise level");
  feedback_cmd->add_option("--envelope-sigma", envelope_sigma, "noise level for envelopes");
  feedback_cmd->add_option("--envelope-trials", envelope_trials, "trials for envelopes");
  feedback_cmd->add_option("--out", out_override, "output directory");

  std::vector<double> alphas{1.0, 0.1, 0.05, 0.01};
  auto* perturb_cmd =
      app.add_subcommand("perturb", "perturbation propagation error study");
  add_problem_flags(perturb_cmd, pa_perturb);
  perturb_cmd->add_option("--alphas", alphas, "line-search parameters to compare");
  perturb_cmd->add_option("--out", out_override, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    fs::path out = out_override.empty() ? default_out_root() : fs::path(out_override);
    if (solve_cmd->parsed()) return run_solve(pa_solve, sa, out);
    if (suite_cmd->parsed()) {
      if (suite_methods.empty()) {
        std::fprintf(stderr, "suite: --methods must list at least one method\n");
        return 2;
      }
      return run_suite(suite_name, suite_methods, suite_reg, suite_seed, out);
    }
    if (feedback_cmd->parsed())
      return run_feedback(pa_feedback, sigmas, trials, envelope_sigma, envelope_trials, out);
    if (perturb_cmd->parsed()) return run_perturb(pa_perturb, alphas, out);
  } catch (const InputError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const CLI::ValidationError& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 2;
}
