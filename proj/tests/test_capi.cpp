#include <doctest.h>

#include <cmath>
#include <cstdio>
#include <fstream>
#include <string>
#include <vector>

#include "lowrank/lowrank.h"

TEST_CASE("status strings and version") {
  CHECK(std::string(lr_status_string(LR_OK)) == "ok");
  CHECK(std::string(lr_status_string(LR_IO_ERROR)) == "i/o error");
  CHECK(std::string(lr_version()) == "0.1.0");
}

TEST_CASE("null arguments are rejected") {
  CHECK(lr_generate(nullptr, nullptr) == LR_INVALID_ARGUMENT);
  CHECK(std::string(lr_last_error()).find("NULL") != std::string::npos);
  lr_solution* sol = nullptr;
  CHECK(lr_solve(nullptr, nullptr, &sol) == LR_INVALID_ARGUMENT);
  CHECK(sol == nullptr);
  lr_observations_free(nullptr);
  lr_solution_free(nullptr);
  lr_records_free(nullptr);
  lr_report_free(nullptr);
  lr_experiment_free(nullptr);
}

TEST_CASE("generate, save, load and solve") {
  lr_generate_params gp;
  lr_generate_params_init(&gp);
  gp.model = "regression";
  gp.p = 12;
  gp.r = 2;
  gp.n = 300;
  gp.seed = 5;
  lr_observations* obs = nullptr;
  REQUIRE(lr_generate(&gp, &obs) == LR_OK);

  lr_observations_info info;
  REQUIRE(lr_observations_get_info(obs, &info) == LR_OK);
  CHECK(std::string(info.model) == "regression");
  CHECK(info.k == 12);
  CHECK(info.num_observations == 3600);
  CHECK(info.has_truth == 1);

  std::vector<double> truth(144);
  CHECK(lr_observations_truth(obs, truth.data(), 10) == LR_INVALID_ARGUMENT);
  REQUIRE(lr_observations_truth(obs, truth.data(), truth.size()) == LR_OK);

  REQUIRE(lr_observations_save(obs, "capi_set.txt") == LR_OK);
  lr_observations* loaded = nullptr;
  REQUIRE(lr_observations_load("capi_set.txt", &loaded) == LR_OK);
  CHECK(lr_observations_load("does/not/exist.txt", &obs) == LR_IO_ERROR);

  lr_lambda lambda;
  REQUIRE(lr_lambda_select(loaded, "auto", 50, 1, &lambda) == LR_OK);
  CHECK(lambda.value == doctest::Approx(10.0 * std::sqrt(24.0 / 300.0)));
  CHECK(lambda.solver_weight == doctest::Approx(lambda.value / 12.0));
  CHECK(lr_lambda_select(loaded, "var", 50, 1, &lambda) == LR_INVALID_ARGUMENT);

  lr_solver_params sp;
  lr_solver_params_init(&sp);
  REQUIRE(lr_lambda_select(loaded, "auto", 50, 1, &lambda) == LR_OK);
  sp.lambda = lambda.solver_weight;
  lr_solution* sol = nullptr;
  REQUIRE(lr_solve(loaded, &sp, &sol) == LR_OK);
  lr_solution_info si;
  REQUIRE(lr_solution_get_info(sol, &si) == LR_OK);
  CHECK(si.rows == 12);
  CHECK(si.converged == 1);
  CHECK(si.optimality_residual <= 1e-3 * sp.lambda);
  std::vector<double> trace(si.trace_length);
  REQUIRE(lr_solution_trace(sol, trace.data(), trace.size()) == LR_OK);
  CHECK(trace.back() == doctest::Approx(si.objective));
  lr_errors err;
  REQUIRE(lr_solution_errors(sol, loaded, &err) == LR_OK);
  CHECK(err.relative < 1.0);
  CHECK(err.frob > 0.0);

  sp.max_iters = 0;
  lr_solution* bad = nullptr;
  CHECK(lr_solve(loaded, &sp, &bad) == LR_INVALID_ARGUMENT);

  lr_solution_free(sol);
  lr_observations_free(loaded);
  lr_observations_free(obs);
  std::remove("capi_set.txt");
  std::remove("capi_set.txt.bin");
}

TEST_CASE("noiseless solve and lambda formulas") {
  lr_generate_params gp;
  lr_generate_params_init(&gp);
  gp.model = "compressed";
  gp.p = 10;
  gp.r = 1;
  gp.n = 150;
  gp.nu = 0.0;
  lr_observations* obs = nullptr;
  REQUIRE(lr_generate(&gp, &obs) == LR_OK);
  lr_solver_params sp;
  lr_solver_params_init(&sp);
  lr_solution* sol = nullptr;
  REQUIRE(lr_solve_noiseless(obs, &sp, 0.0, 0.5, 20, &sol) == LR_OK);
  lr_errors err;
  REQUIRE(lr_solution_errors(sol, obs, &err) == LR_OK);
  CHECK(err.relative <= 1e-3);
  lr_solution_free(sol);
  lr_observations_free(obs);

  lr_lambda_params lp{1.0, 1.0, 1.0, 0.5, 40, 40, 1000};
  lr_lambda out;
  REQUIRE(lr_lambda_rule("var", &lp, &out) == LR_OK);
  CHECK(out.value == doctest::Approx(32.0));
  CHECK(lr_lambda_rule("nope", &lp, &out) == LR_INVALID_ARGUMENT);
}

TEST_CASE("memory budget surfaces as a resource error") {
  lr_generate_params gp;
  lr_generate_params_init(&gp);
  gp.model = "compressed";
  gp.p = 10;
  gp.n = 1000;
  gp.budget_bytes = 100.0;
  lr_observations* obs = nullptr;
  CHECK(lr_generate(&gp, &obs) == LR_RESOURCE_LIMIT);
  CHECK(obs == nullptr);
}

TEST_CASE("experiments through the C interface") {
  lr_experiment* cfg = nullptr;
  REQUIRE(lr_experiment_create(&cfg) == LR_OK);
  CHECK(lr_experiment_set(cfg, "bogus", "1") == LR_INVALID_ARGUMENT);
  REQUIRE(lr_experiment_set(cfg, "model", "regression") == LR_OK);
  REQUIRE(lr_experiment_set(cfg, "p_list", "8,10") == LR_OK);
  REQUIRE(lr_experiment_set(cfg, "r", "2") == LR_OK);
  REQUIRE(lr_experiment_set(cfg, "rescaled_grid", "2,4") == LR_OK);
  REQUIRE(lr_experiment_set(cfg, "trials_per_point", "2") == LR_OK);
  REQUIRE(lr_experiment_validate(cfg) == LR_OK);
  lr_records* records = nullptr;
  REQUIRE(lr_experiment_run(cfg, &records) == LR_OK);
  size_t total = 0, failed = 0;
  REQUIRE(lr_records_count(records, &total, &failed) == LR_OK);
  CHECK(total == 8);
  CHECK(failed == 0);
  lr_record rec;
  REQUIRE(lr_records_get(records, 0, &rec) == LR_OK);
  CHECK(std::string(rec.model) == "regression");
  CHECK(rec.p == 8);
  CHECK(lr_records_get(records, 99, &rec) == LR_INVALID_ARGUMENT);
  double spread = -1;
  REQUIRE(lr_records_collapse(records, 2.0, &spread) == LR_OK);
  CHECK(spread >= 0.0);
  REQUIRE(lr_records_write_csv(records, "capi_records.csv") == LR_OK);
  REQUIRE(lr_records_write_plot(records, "capi_records.svg") == LR_OK);
  lr_records* back = nullptr;
  REQUIRE(lr_records_read_csv("capi_records.csv", &back) == LR_OK);
  REQUIRE(lr_records_count(back, &total, nullptr) == LR_OK);
  CHECK(total == 8);
  lr_records_free(back);
  lr_records_free(records);
  lr_experiment_free(cfg);
  std::remove("capi_records.csv");
  std::remove("capi_records.svg");
}

TEST_CASE("checks through the C interface") {
  lr_check_params cp;
  lr_check_params_init(&cp);
  cp.kind = "meta";
  cp.n = 200;
  cp.t = 0.3;
  cp.trials = 100;
  lr_report* report = nullptr;
  REQUIRE(lr_check_run(&cp, &report) == LR_OK);
  lr_report_info ri;
  REQUIRE(lr_report_get_info(report, &ri) == LR_OK);
  CHECK(ri.trials == 100);
  CHECK(ri.meets_floor == 1);
  const char* summary = nullptr;
  REQUIRE(lr_report_summary(report, &summary) == LR_OK);
  CHECK(std::string(summary).find("meta") != std::string::npos);
  lr_report_free(report);
  cp.kind = "unknown";
  CHECK(lr_check_run(&cp, &report) == LR_INVALID_ARGUMENT);
}
