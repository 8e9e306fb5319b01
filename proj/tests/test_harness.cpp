#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include "lowrank/harness.hpp"

using namespace lowrank;

namespace {

ExperimentConfig tiny(ModelKind model) {
  ExperimentConfig cfg;
  cfg.model = model;
  cfg.p_list = {10};
  cfg.r = 2;
  cfg.rescaled_grid = {4};
  cfg.trials_per_point = 1;
  cfg.master_seed = 42;
  return cfg;
}

TrialRecord synthetic(Eigen::Index p, double t, double err) {
  TrialRecord r;
  r.model = "regression";
  r.p = p;
  r.k = p;
  r.r = 10;
  r.N = static_cast<Eigen::Index>(t * 10 * p);
  r.rescaled_N = static_cast<double>(r.N) / (10.0 * p);
  r.frob_error = err;
  return r;
}

std::string slurp(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("config validation") {
  ExperimentConfig cfg = tiny(ModelKind::Multivar);
  CHECK_NOTHROW(cfg.validate());
  cfg.rescaled_grid = {3, 2};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.rescaled_grid = {0.5};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny(ModelKind::Multivar);
  cfg.trials_per_point = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg = tiny(ModelKind::Compressed);
  cfg.p_list = {80};
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.allow_large_compressed = true;
  CHECK_NOTHROW(cfg.validate());
  cfg = tiny(ModelKind::Compressed);
  cfg.lambda_rule = LambdaRule::MultivarCor3;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("config file parsing") {
  const ExperimentConfig cfg = parse_experiment_config(
      "# regression sweep\n"
      "model = regression\n"
      "p_list = 20, 40\n"
      "k = square\n"
      "r = 5\n"
      "sigma_spec = scaled_identity:2\n"
      "rescaled_grid = 2,4,8\n"
      "trials_per_point = 3\n"
      "master_seed = 99\n"
      "lambda_rule = generic\n"
      "solver.max_iters = 100\n"
      "solver.acceleration = false\n"
      "output_path = out/reg\n"
      "workers = 2\n");
  CHECK(cfg.model == ModelKind::Multivar);
  CHECK(cfg.p_list == std::vector<Eigen::Index>{20, 40});
  CHECK_FALSE(cfg.k.has_value());
  CHECK(cfg.r == 5);
  CHECK(cfg.sigma_scale == 2.0);
  CHECK(cfg.rescaled_grid == std::vector<double>{2, 4, 8});
  CHECK(cfg.trials_per_point == 3);
  CHECK(cfg.master_seed == 99);
  CHECK(cfg.effective_lambda_rule() == LambdaRule::GenericAdjoint);
  CHECK(cfg.solver.max_iters == 100);
  CHECK_FALSE(cfg.solver.acceleration);
  CHECK(cfg.output_path == "out/reg");
  CHECK(cfg.workers == 2);

  const ExperimentConfig manual = parse_experiment_config("model = compressed\np_list = 10\nr = 2\nlambda_rule = 0.5\n");
  CHECK(manual.effective_lambda_rule() == LambdaRule::Manual);
  CHECK(manual.manual_lambda == 0.5);

  CHECK_THROWS_AS(parse_experiment_config("modle = var\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config("model var\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config("r = ten\n"), std::invalid_argument);
  CHECK_THROWS_AS(parse_experiment_config("model = compressed\np_list = 80\n"), std::invalid_argument);
}

TEST_CASE("trial seeds") {
  std::set<std::uint64_t> seen;
  for (Eigen::Index p : {20, 40})
    for (int g = 0; g < 5; ++g)
      for (int t = 0; t < 20; ++t) seen.insert(trial_seed(7, p, g, t));
  CHECK(seen.size() == 200);
  CHECK(trial_seed(7, 20, 1, 2) == trial_seed(7, 20, 1, 2));
  CHECK(trial_seed(7, 20, 1, 2) != trial_seed(8, 20, 1, 2));
}

TEST_CASE("single trial experiments") {
  for (ModelKind model : {ModelKind::Multivar, ModelKind::Var, ModelKind::Compressed}) {
    const auto records = run_experiment(tiny(model));
    REQUIRE(records.size() == 1);
    const TrialRecord& r = records[0];
    CHECK_FALSE(r.failed);
    CHECK(r.model == to_string(model));
    CHECK(r.N == 80);
    CHECK(r.rescaled_N == static_cast<double>(r.N) / (r.r * r.p));
    CHECK(r.frob_error >= 0.0);
    CHECK(r.bound_value > 0.0);
    CHECK(r.iterations > 0);
  }
}

TEST_CASE("failed trials are recorded, not thrown") {
  ExperimentConfig cfg = tiny(ModelKind::Compressed);
  cfg.operator_budget_bytes = 1000;
  const auto records = run_experiment(cfg);
  REQUIRE(records.size() == 1);
  CHECK(records[0].failed);
  CHECK(records[0].failure.find("materialized operator") != std::string::npos);
  CHECK_THROWS_AS(emit_csv(records, (std::filesystem::temp_directory_path() / "x.csv").string()),
                  std::invalid_argument);
}

TEST_CASE("determinism and worker independence") {
  ExperimentConfig cfg = tiny(ModelKind::Multivar);
  cfg.p_list = {8, 12};
  cfg.rescaled_grid = {2, 4};
  cfg.trials_per_point = 2;
  const auto a = run_experiment(cfg);
  cfg.workers = 3;
  const auto b = run_experiment(cfg);
  REQUIRE(a.size() == 8);
  REQUIRE(b.size() == 8);
  for (std::size_t i = 0; i < a.size(); ++i) {
    CHECK(a[i].p == b[i].p);
    CHECK(a[i].seed == b[i].seed);
    CHECK(a[i].frob_error == b[i].frob_error);
    CHECK(a[i].lambda == b[i].lambda);
  }
}

TEST_CASE("error decreases with the sample size") {
  ExperimentConfig cfg = tiny(ModelKind::Multivar);
  cfg.p_list = {20};
  cfg.r = 4;
  cfg.rescaled_grid = {2, 4, 8};
  cfg.trials_per_point = 5;
  const auto curves = mean_curves(run_experiment(cfg));
  REQUIRE(curves.size() == 3);
  CHECK(curves[1].mean_error < curves[0].mean_error);
  CHECK(curves[2].mean_error < curves[1].mean_error);
}

TEST_CASE("collapse metric") {
  std::vector<TrialRecord> same = {synthetic(40, 4, 1.0), synthetic(80, 4, 1.0), synthetic(160, 4, 1.0)};
  CHECK(collapse_metric(same, 4) == 0.0);
  std::vector<TrialRecord> two = {synthetic(40, 4, 1.0), synthetic(80, 4, 1.1), synthetic(80, 4, 1.3)};
  CHECK(collapse_metric(two, 4) == doctest::Approx(0.2 / 1.1));
  CHECK_THROWS_AS(collapse_metric({synthetic(40, 4, 1.0)}, 4), std::invalid_argument);
  CHECK_THROWS_AS(collapse_metric(same, 5), std::invalid_argument);
}

TEST_CASE("CSV output") {
  const auto dir = std::filesystem::temp_directory_path() / "lowrank_harness_test";
  std::filesystem::create_directories(dir);
  ExperimentConfig cfg = tiny(ModelKind::Multivar);
  const auto one = run_experiment(cfg);
  emit_csv(one, (dir / "one.csv").string());
  const std::string text = slurp(dir / "one.csv");
  CHECK(std::count(text.begin(), text.end(), '\n') == 2);
  CHECK(text.rfind(std::string(kCsvHeader) + "\n", 0) == 0);
  CHECK(text.find('\r') == std::string::npos);

  cfg.p_list = {8, 10};
  cfg.rescaled_grid = {2, 3};
  cfg.trials_per_point = 2;
  const auto many = run_experiment(cfg);
  emit_csv(many, (dir / "many.csv").string());
  const auto back = read_csv((dir / "many.csv").string());
  REQUIRE(back.size() == many.size());
  for (std::size_t i = 0; i < many.size(); ++i) {
    CHECK(back[i].model == many[i].model);
    CHECK(back[i].p == many[i].p);
    CHECK(back[i].k == many[i].k);
    CHECK(back[i].N == many[i].N);
    CHECK(back[i].rescaled_N == many[i].rescaled_N);
    CHECK(back[i].trial == many[i].trial);
    CHECK(back[i].seed == many[i].seed);
    CHECK(back[i].lambda == many[i].lambda);
    CHECK(back[i].frob_error == many[i].frob_error);
    CHECK(back[i].relative_error == many[i].relative_error);
    CHECK(back[i].nuclear_error == many[i].nuclear_error);
    CHECK(back[i].iterations == many[i].iterations);
    CHECK(back[i].runtime_ms == many[i].runtime_ms);
    CHECK(back[i].bound_value == many[i].bound_value);
    CHECK(back[i].bound_ratio == many[i].bound_ratio);
  }
  CHECK(format_csv(back) == format_csv(many));
  CHECK_THROWS_AS(parse_csv("bad,header\n"), std::invalid_argument);
  CHECK_THROWS_AS(emit_csv(many, (dir / "no_such_dir" / "x.csv").string()), std::runtime_error);

  std::vector<TrialRecord> with_failure = many;
  with_failure[0].failed = true;
  with_failure[0].failure = "boom, with comma";
  emit_failures(with_failure, (dir / "fail.csv").string());
  const std::string failures = slurp(dir / "fail.csv");
  CHECK(failures.find("boom; with comma") != std::string::npos);
  std::filesystem::remove_all(dir);
}

TEST_CASE("SVG plot") {
  ExperimentConfig cfg = tiny(ModelKind::Multivar);
  cfg.p_list = {8, 12};
  cfg.rescaled_grid = {2, 3, 4};
  const std::string svg = render_plot(run_experiment(cfg));
  CHECK(svg.rfind("<?xml", 0) == 0);
  CHECK(svg.find("<svg xmlns=\"http://www.w3.org/2000/svg\"") != std::string::npos);
  CHECK(svg.size() > 6);
  CHECK(svg.substr(svg.size() - 7) == "</svg>\n");
  std::size_t polylines = 0;
  for (auto pos = svg.find("<polyline"); pos != std::string::npos; pos = svg.find("<polyline", pos + 1)) ++polylines;
  CHECK(polylines == 4);
  CHECK(svg.find("(a) error vs N") != std::string::npos);
  CHECK(svg.find("(b) error vs N/(rp)") != std::string::npos);
  CHECK(svg.find("1e") != std::string::npos);
  // Balanced element tags.
  std::size_t opens = 0, closes = 0;
  for (auto pos = svg.find("<g>"); pos != std::string::npos; pos = svg.find("<g>", pos + 1)) ++opens;
  for (auto pos = svg.find("</g>"); pos != std::string::npos; pos = svg.find("</g>", pos + 1)) ++closes;
  CHECK(opens == 2);
  CHECK(closes == 2);
  CHECK_THROWS_AS(render_plot({}), std::invalid_argument);
}
