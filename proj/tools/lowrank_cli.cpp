// Command-line front end for liblowrank.
#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "lowrank/lowrank.h"

namespace {

struct CliError {
  int code;
};

void check(lr_status status, const char* what) {
  if (status != LR_OK) {
    std::cerr << "lowrank: " << what << ": " << lr_status_string(status) << ": " << lr_last_error() << '\n';
    throw CliError{status == LR_INVALID_ARGUMENT ? 2 : 1};
  }
}

template <class T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  ~Handle() { Free(ptr); }
  T** out() { return &ptr; }
  T* get() const { return ptr; }
};

using Observations = Handle<lr_observations, lr_observations_free>;
using Solution = Handle<lr_solution, lr_solution_free>;
using Experiment = Handle<lr_experiment, lr_experiment_free>;
using Records = Handle<lr_records, lr_records_free>;
using Report = Handle<lr_report, lr_report_free>;

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) {
    std::cerr << "lowrank: cannot write '" << path << "'\n";
    throw CliError{1};
  }
  out << text;
}

struct GenerateOptions {
  std::string model = "regression";
  int64_t p = 20, k = 0, r = 2, n = 200;
  double nu = 1.0, gamma = 0.5, q = 0.0, rq = 1.0, signal_scale = 10.0;
  uint64_t seed = 1;
};

void add_generate_flags(CLI::App* cmd, GenerateOptions& g) {
  cmd->add_option("--model", g.model, "regression | var | compressed | identity")->capture_default_str();
  cmd->add_option("--p", g.p, "columns of the target")->capture_default_str();
  cmd->add_option("--k", g.k, "rows of the target (default: p)");
  cmd->add_option("--r", g.r, "rank of an exact-rank target")->capture_default_str();
  cmd->add_option("--n", g.n, "samples (regression, var) or observations (compressed)")->capture_default_str();
  cmd->add_option("--nu", g.nu, "noise standard deviation")->capture_default_str();
  cmd->add_option("--gamma", g.gamma, "var: operator norm of the system matrix")->capture_default_str();
  cmd->add_option("--q", g.q, "0 for exact rank, (0,1] for near low rank")->capture_default_str();
  cmd->add_option("--rq", g.rq, "l_q radius when q > 0")->capture_default_str();
  cmd->add_option("--signal-scale", g.signal_scale, "singular values of an exact-rank target")
      ->capture_default_str();
  cmd->add_option("--seed", g.seed, "master seed")->capture_default_str();
}

void generate(const GenerateOptions& g, Observations& obs) {
  lr_generate_params params;
  lr_generate_params_init(&params);
  params.model = g.model.c_str();
  params.p = g.p;
  params.k = g.k;
  params.r = g.r;
  params.n = g.n;
  params.nu = g.nu;
  params.gamma = g.gamma;
  params.q = g.q;
  params.rq = g.rq;
  params.signal_scale = g.signal_scale;
  params.seed = g.seed;
  check(lr_generate(&params, obs.out()), "generate");
}

std::string strip_csv(std::string path) {
  if (path.size() > 4 && path.compare(path.size() - 4, 4, ".csv") == 0) path.resize(path.size() - 4);
  return path;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Nuclear-norm regularized low-rank matrix estimation"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(lr_version()));

  // generate
  GenerateOptions gen;
  std::string gen_out;
  auto* gen_cmd = app.add_subcommand("generate", "simulate an observation set and write it to disk");
  add_generate_flags(gen_cmd, gen);
  gen_cmd->add_option("--out", gen_out, "header path; the payload goes to <out>.bin")->required();

  // solve
  std::string solve_in, solve_out, solve_lambda = "auto", solve_theta;
  int max_iters = 5000;
  double rel_tol = 1e-9;
  bool no_accel = false;
  uint64_t solve_seed = 1;
  auto* solve_cmd = app.add_subcommand("solve", "estimate the target of an observation set");
  solve_cmd->add_option("input", solve_in, "observation set header written by generate")->required();
  solve_cmd->add_option("--lambda", solve_lambda, "auto or a solver weight")->capture_default_str();
  solve_cmd->add_option("--out", solve_out, "summary JSON path (default: stdout)");
  solve_cmd->add_option("--theta-out", solve_theta, "write the estimate as CSV");
  solve_cmd->add_option("--max-iters", max_iters)->capture_default_str();
  solve_cmd->add_option("--rel-tol", rel_tol)->capture_default_str();
  solve_cmd->add_flag("--no-acceleration", no_accel, "plain proximal gradient");
  solve_cmd->add_option("--seed", solve_seed, "seed of the generic lambda rule")->capture_default_str();

  // experiment
  std::string exp_config, exp_out;
  unsigned exp_workers = 0;
  auto* exp_cmd = app.add_subcommand("experiment", "run a sweep from a config file, emit CSV and SVG");
  exp_cmd->add_option("--config", exp_config, "flat key = value config file")->required()->check(CLI::ExistingFile);
  exp_cmd->add_option("--out", exp_out, "output prefix (overrides output_path)");
  exp_cmd->add_option("--workers", exp_workers, "worker threads (overrides workers)");

  // check
  std::string check_kind, check_out;
  lr_check_params cp;
  lr_check_params_init(&cp);
  int64_t check_k = 0, check_p = 50, check_n = 200, check_r = 10;
  int check_trials = 200, check_tests = 100;
  double check_t = 0.2, check_gamma = 0.5, check_nu = 1.0;
  uint64_t check_seed = 1;
  unsigned check_workers = 1;
  auto* check_cmd = app.add_subcommand("check", "frequency check of a probabilistic condition");
  check_cmd->add_option("kind", check_kind, "wishart | var | prop1 | meta")
      ->required()
      ->check(CLI::IsMember({"wishart", "var", "prop1", "meta"}));
  check_cmd->add_option("--p", check_p)->capture_default_str();
  check_cmd->add_option("--k", check_k, "prop1 rows (default: p)");
  check_cmd->add_option("--n", check_n, "samples, observations (prop1) or dimension (meta)")->capture_default_str();
  check_cmd->add_option("--r", check_r, "var: rank of the system matrix")->capture_default_str();
  check_cmd->add_option("--gamma", check_gamma)->capture_default_str();
  check_cmd->add_option("--nu", check_nu)->capture_default_str();
  check_cmd->add_option("--t", check_t, "meta: deviation level")->capture_default_str();
  check_cmd->add_option("--trials", check_trials)->capture_default_str();
  check_cmd->add_option("--test-matrices", check_tests, "prop1: test matrices per draw")->capture_default_str();
  check_cmd->add_option("--seed", check_seed)->capture_default_str();
  check_cmd->add_option("--workers", check_workers)->capture_default_str();
  check_cmd->add_option("--out", check_out, "per-trial CSV");

  // lambda
  GenerateOptions lam;
  std::string lam_rule = "auto", lam_in;
  auto* lam_cmd = app.add_subcommand("lambda", "print the regularization weight of a rule");
  add_generate_flags(lam_cmd, lam);
  lam_cmd->add_option("--rule", lam_rule, "auto | multivar | var | compressed | generic")->capture_default_str();
  lam_cmd->add_option("--in", lam_in, "use a saved observation set instead of simulating one");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen_cmd) {
      Observations obs;
      generate(gen, obs);
      check(lr_observations_save(obs.get(), gen_out.c_str()), "save");
      lr_observations_info info;
      check(lr_observations_get_info(obs.get(), &info), "info");
      std::cout << "wrote " << gen_out << " (" << info.model << ", " << info.k << "x" << info.p << ", N = "
                << info.num_observations << ")\n";
      return 0;
    }

    if (*solve_cmd) {
      Observations obs;
      check(lr_observations_load(solve_in.c_str(), obs.out()), "load");
      lr_observations_info info;
      check(lr_observations_get_info(obs.get(), &info), "info");

      lr_solver_params params;
      lr_solver_params_init(&params);
      params.max_iters = max_iters;
      params.rel_tol = rel_tol;
      params.acceleration = no_accel ? 0 : 1;

      Solution sol;
      nlohmann::ordered_json summary;
      summary["model"] = info.model;
      summary["k"] = info.k;
      summary["p"] = info.p;
      summary["N"] = info.num_observations;
      summary["noise_level"] = info.noise_level;
      if (info.noise_level == 0.0 && solve_lambda == "auto") {
        check(lr_solve_noiseless(obs.get(), &params, 0.0, 0.5, 20, sol.out()), "solve");
        summary["method"] = "continuation";
      } else {
        lr_lambda lambda{};
        if (solve_lambda == "auto") {
          check(lr_lambda_select(obs.get(), "auto", 50, solve_seed, &lambda), "lambda");
        } else {
          try {
            lambda.solver_weight = lambda.value = std::stod(solve_lambda);
          } catch (const std::exception&) {
            std::cerr << "lowrank: --lambda must be 'auto' or a number\n";
            return 2;
          }
        }
        params.lambda = lambda.solver_weight;
        check(lr_solve(obs.get(), &params, sol.out()), "solve");
        summary["method"] = "proximal_gradient";
      }
      lr_solution_info si;
      check(lr_solution_get_info(sol.get(), &si), "solution info");
      summary["lambda"] = si.lambda;
      summary["iterations"] = si.iterations;
      summary["converged"] = si.converged != 0;
      summary["objective"] = si.objective;
      summary["rank"] = si.rank;
      summary["optimality_residual"] = si.optimality_residual;
      summary["alignment_residual"] = si.alignment_residual;
      summary["data_residual"] = si.data_residual;
      if (info.has_truth) {
        lr_errors err;
        check(lr_solution_errors(sol.get(), obs.get(), &err), "errors");
        summary["frob_error"] = err.frob;
        summary["relative_error"] = err.relative;
        summary["nuclear_error"] = err.nuclear;
      }
      write_text(solve_out, summary.dump(2) + "\n");
      if (!solve_theta.empty()) {
        std::vector<double> theta(static_cast<std::size_t>(si.rows * si.cols));
        check(lr_solution_theta(sol.get(), theta.data(), theta.size()), "estimate");
        std::string text;
        char buf[32];
        for (int64_t i = 0; i < si.rows; ++i) {
          for (int64_t j = 0; j < si.cols; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", theta[static_cast<std::size_t>(j * si.rows + i)]);
            text += (j ? "," : "");
            text += buf;
          }
          text += '\n';
        }
        write_text(solve_theta, text);
      }
      return 0;
    }

    if (*exp_cmd) {
      Experiment cfg;
      check(lr_experiment_load(exp_config.c_str(), cfg.out()), "config");
      if (exp_workers > 0) check(lr_experiment_set(cfg.get(), "workers", std::to_string(exp_workers).c_str()), "workers");
      std::string prefix = exp_out;
      if (prefix.empty()) {
        const char* path = nullptr;
        check(lr_experiment_output_path(cfg.get(), &path), "config");
        prefix = path;
      }
      if (prefix.empty()) prefix = "experiment";
      prefix = strip_csv(prefix);

      Records records;
      check(lr_experiment_run(cfg.get(), records.out()), "experiment");
      std::size_t total = 0, failed = 0;
      check(lr_records_count(records.get(), &total, &failed), "records");
      if (failed < total) {
        check(lr_records_write_csv(records.get(), (prefix + ".csv").c_str()), "csv");
        check(lr_records_write_plot(records.get(), (prefix + ".svg").c_str()), "plot");
        std::cout << "wrote " << prefix << ".csv and " << prefix << ".svg\n";
      }
      if (failed > 0) {
        check(lr_records_write_failures(records.get(), (prefix + ".failures.csv").c_str()), "failures");
        std::cout << "wrote " << prefix << ".failures.csv\n";
      }
      std::cout << (total - failed) << " trials succeeded, " << failed << " failed\n";
      return failed == total ? 1 : 0;
    }

    if (*check_cmd) {
      cp.kind = check_kind.c_str();
      cp.k = check_k;
      cp.p = check_p;
      cp.n = check_n;
      cp.r = check_r;
      cp.gamma = check_gamma;
      cp.nu = check_nu;
      cp.t = check_t;
      cp.trials = check_trials;
      cp.test_matrices = check_tests;
      cp.seed = check_seed;
      cp.workers = check_workers;
      Report report;
      check(lr_check_run(&cp, report.out()), "check");
      const char* summary = nullptr;
      check(lr_report_summary(report.get(), &summary), "summary");
      std::cout << summary;
      if (!check_out.empty()) check(lr_report_write_csv(report.get(), check_out.c_str()), "csv");
      lr_report_info ri;
      check(lr_report_get_info(report.get(), &ri), "report");
      return ri.meets_floor ? 0 : 3;
    }

    if (*lam_cmd) {
      Observations obs;
      if (!lam_in.empty()) {
        check(lr_observations_load(lam_in.c_str(), obs.out()), "load");
      } else {
        generate(lam, obs);
      }
      lr_lambda lambda;
      check(lr_lambda_select(obs.get(), lam_rule.c_str(), 50, lam.seed, &lambda), "lambda");
      std::printf("rule: %s\nvalue: %.17g\nsolver_weight: %.17g\n", lam_rule.c_str(), lambda.value,
                  lambda.solver_weight);
      return 0;
    }
  } catch (const CliError& e) {
    return e.code;
  }
  return 0;
}
