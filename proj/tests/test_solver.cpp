#include <doctest.h>

#include <cmath>

#include "lowrank/models.hpp"
#include "lowrank/random.hpp"
#include "lowrank/solver.hpp"

using namespace lowrank;

TEST_CASE("solver config validation") {
  SolverConfig cfg;
  cfg.lambda = -1;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.lambda = 0.1;
  cfg.max_iters = 0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.max_iters = 10;
  cfg.step = -1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
}

TEST_CASE("gradient matches central finite differences") {
  Rng rng(1);
  const auto op = identity_operator(4, 3);
  const GroundTruth t = generate_exact_lowrank(4, 3, 2, 1.0, 2);
  std::vector<ObservationSet> sets = {
      sample_multivar(t, 6, Matrix::Identity(3, 3), 0.5, 3), sample_compressed(t, 20, 0.5, 4),
      observe(op, t.theta_star, 0.5, 5)};
  for (const auto& obs : sets) {
    const Matrix theta = gaussian_matrix(4, 3, rng);
    const Matrix g = smooth_gradient(*obs.op, obs.y, theta);
    Matrix fd(4, 3);
    const double h = 1e-5;
    for (Eigen::Index j = 0; j < 3; ++j) {
      for (Eigen::Index i = 0; i < 4; ++i) {
        Matrix plus = theta, minus = theta;
        plus(i, j) += h;
        minus(i, j) -= h;
        fd(i, j) = (objective(*obs.op, obs.y, plus, 0.0) - objective(*obs.op, obs.y, minus, 0.0)) / (2 * h);
      }
    }
    CHECK((fd - g).norm() <= 1e-6 * g.norm());
  }
}

TEST_CASE("over-regularized problems return zero") {
  const GroundTruth t = generate_exact_lowrank(5, 5, 2, 1.0, 1);
  const ObservationSet obs = sample_compressed(t, 60, 0.1, 2);
  const double lmax = operator_norm(obs.op->adjoint(obs.y)) / 60.0;
  SolverConfig cfg;
  cfg.lambda = 1.01 * lmax;
  const SolveResult r = solve(obs, cfg);
  CHECK(r.theta_hat.norm() == 0.0);
  CHECK(r.optimality_residual == 0.0);
}

TEST_CASE("identity operator closed form") {
  const GroundTruth t = generate_exact_lowrank(6, 5, 2, 3.0, 1);
  Rng rng(4);
  const Matrix theta = t.theta_star + 0.3 * gaussian_matrix(6, 5, rng);
  const ObservationSet obs = observe(identity_operator(6, 5), theta, 0.0, 2);
  for (double lambda : {0.001, 0.01, 0.05}) {
    SolverConfig cfg;
    cfg.lambda = lambda;
    const SolveResult r = solve(obs, cfg);
    const Matrix oracle = svt(theta, 30.0 * lambda);
    CHECK((r.theta_hat - oracle).norm() <= 1e-6 * oracle.norm());
  }
}

TEST_CASE("minimizer beats random perturbations") {
  const GroundTruth t = generate_exact_lowrank(5, 5, 2, 2.0, 1);
  const ObservationSet obs = sample_compressed(t, 60, 0.5, 2);
  SolverConfig cfg;
  cfg.lambda = 0.2;
  cfg.rel_tol = 1e-14;
  cfg.max_iters = 20000;
  const SolveResult r = solve(obs, cfg);
  const double best = objective(*obs.op, obs.y, r.theta_hat, cfg.lambda);
  Rng rng(3);
  int worse = 0;
  for (int i = 0; i < 1000; ++i) {
    Matrix d = gaussian_matrix(5, 5, rng);
    d *= 1e-3 / d.norm();
    if (objective(*obs.op, obs.y, r.theta_hat + d, cfg.lambda) >= best - 1e-12) ++worse;
  }
  CHECK(worse == 1000);
}

TEST_CASE("objective trace is nonincreasing without acceleration") {
  const GroundTruth t = generate_exact_lowrank(8, 8, 2, 5.0, 1);
  const ObservationSet obs = sample_multivar(t, 40, Matrix::Identity(8, 8), 1.0, 2);
  SolverConfig cfg;
  cfg.lambda = 0.05;
  cfg.acceleration = false;
  const SolveResult r = solve(obs, cfg);
  REQUIRE(r.objective_trace.size() >= 2);
  for (std::size_t i = 1; i < r.objective_trace.size(); ++i) {
    CHECK(r.objective_trace[i] <= r.objective_trace[i - 1] * (1 + 1e-15) + 1e-300);
  }
  CHECK(r.converged);
}

TEST_CASE("certificates on all three models") {
  const GroundTruth t = generate_exact_lowrank(10, 10, 2, 5.0, 1);
  std::vector<ObservationSet> sets = {sample_multivar(t, 40, Matrix::Identity(10, 10), 1.0, 2),
                                      sample_compressed(t, 400, 1.0, 3)};
  const GroundTruth v = generate_exact_lowrank(10, 10, 2, 0.5, 4);
  sets.push_back(sample_var(make_var_params(v.theta_star, 1.0, 200, 0.5), 5));
  for (const auto& obs : sets) {
    SolverConfig cfg;
    cfg.lambda = 0.1 * operator_norm(obs.op->adjoint(obs.y)) / static_cast<double>(obs.num_observations());
    const SolveResult r = solve(obs, cfg);
    CHECK(r.converged);
    CHECK(r.optimality_residual <= 1e-3 * cfg.lambda);
    CHECK(r.alignment_residual <= 1e-3 * cfg.lambda);
    CHECK(r.data_residual < 1.0);
  }
}

TEST_CASE("warm start reaches the same solution") {
  const GroundTruth t = generate_exact_lowrank(6, 6, 2, 3.0, 1);
  const ObservationSet obs = sample_compressed(t, 120, 0.5, 2);
  SolverConfig cfg;
  cfg.lambda = 0.1;
  cfg.rel_tol = 1e-13;
  const SolveResult cold = solve(obs, cfg);
  const SolveResult warm = solve(obs, cfg, &cold.theta_hat);
  CHECK((cold.theta_hat - warm.theta_hat).norm() <= 1e-6 * cold.theta_hat.norm());
  CHECK(warm.iterations <= cold.iterations);
  const Matrix wrong = Matrix::Zero(3, 3);
  CHECK_THROWS_AS(solve(obs, cfg, &wrong), std::invalid_argument);
}

TEST_CASE("noiseless recovery") {
  SUBCASE("fully determined identity sampling") {
    const GroundTruth t = generate_exact_lowrank(6, 5, 5, 1.0, 1);
    const ObservationSet obs = observe(identity_operator(6, 5), t.theta_star, 0.0, 2);
    const SolveResult r = solve_noiseless(obs, {});
    CHECK((r.theta_hat - t.theta_star).norm() <= 1e-4 * t.theta_star.norm());
  }
  SUBCASE("gaussian measurements of a rank-2 matrix") {
    const GroundTruth t = generate_exact_lowrank(20, 20, 2, 1.0, 3);
    const ObservationSet obs = sample_compressed(t, 480, 0.0, 4);
    const SolveResult r = solve_noiseless(obs, {});
    CHECK((r.theta_hat - t.theta_star).norm() <= 1e-3 * t.theta_star.norm());
  }
  SUBCASE("a single measurement cannot identify the matrix") {
    const GroundTruth t = generate_exact_lowrank(5, 5, 1, 1.0, 5);
    const ObservationSet obs = sample_compressed(t, 1, 0.0, 6);
    const SolveResult r = solve_noiseless(obs, {});
    CHECK(r.data_residual <= 1e-3);
    CHECK((r.theta_hat - t.theta_star).norm() >= 0.5 * t.theta_star.norm());
  }
  SUBCASE("noisy data is rejected") {
    const GroundTruth t = generate_exact_lowrank(4, 4, 1, 1.0, 5);
    CHECK_THROWS_AS(solve_noiseless(sample_compressed(t, 30, 0.1, 6), {}), std::invalid_argument);
  }
}
