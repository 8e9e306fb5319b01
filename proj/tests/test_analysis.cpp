#include <doctest.h>

#include <Eigen/SVD>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "lowrank/analysis.hpp"
#include "lowrank/random.hpp"
#include "lowrank/regsel.hpp"
#include "lowrank/solver.hpp"

using namespace lowrank;

namespace {

double jacobi_nuclear(const Matrix& m) { return Eigen::JacobiSVD<Matrix>(m).singularValues().sum(); }

Eigen::Index jacobi_rank(const Matrix& m) {
  const Vector s = Eigen::JacobiSVD<Matrix>(m).singularValues();
  if (s.size() == 0 || s(0) == 0) return 0;
  return (s.array() > 1e-10 * s(0)).count();
}

SubspacePair random_subspaces(Eigen::Index k, Eigen::Index p, Eigen::Index r, Rng& rng) {
  return {orthonormal_basis(gaussian_matrix(k, r, rng)), orthonormal_basis(gaussian_matrix(p, r, rng))};
}

}  // namespace

TEST_CASE("error decomposition") {
  Rng rng(1);
  const SubspacePair sp = random_subspaces(10, 10, 3, rng);
  SUBCASE("error inside the model space") {
    const Matrix delta = sp.U * gaussian_matrix(3, 3, rng) * sp.V.transpose();
    const ErrorDecomposition d = decompose_error(delta, sp);
    CHECK(d.delta_dblprime.norm() <= 1e-12 * delta.norm());
  }
  SUBCASE("error orthogonal to both subspaces") {
    const Matrix uperp = Matrix::Identity(10, 10) - sp.U * sp.U.transpose();
    const Matrix vperp = Matrix::Identity(10, 10) - sp.V * sp.V.transpose();
    const Matrix delta = uperp * gaussian_matrix(10, 10, rng) * vperp;
    const ErrorDecomposition d = decompose_error(delta, sp);
    CHECK(d.delta_prime.norm() <= 1e-12 * delta.norm());
    CHECK((d.delta_dblprime - delta).norm() <= 1e-12 * delta.norm());
  }
  SUBCASE("random error") {
    const Matrix delta = gaussian_matrix(10, 10, rng);
    const ErrorDecomposition d = decompose_error(delta, sp);
    CHECK(jacobi_rank(d.delta_prime) <= 6);
    const Matrix a = sp.U * Vector::LinSpaced(3, 3, 1).asDiagonal() * sp.V.transpose();
    CHECK(std::abs(jacobi_nuclear(a + d.delta_dblprime) - jacobi_nuclear(a) - jacobi_nuclear(d.delta_dblprime)) <=
          1e-10 * jacobi_nuclear(a + d.delta_dblprime));
    CHECK((d.delta_prime + d.delta_dblprime - delta).norm() <= 1e-12 * delta.norm());
  }
  SUBCASE("projections") {
    const Matrix theta = gaussian_matrix(10, 10, rng);
    const Matrix in = project_model(theta, sp);
    CHECK((project_model(in, sp) - in).norm() <= 1e-12 * theta.norm());
    CHECK(project_model_perp(in, sp).norm() <= 1e-12 * theta.norm());
  }
  SUBCASE("shape mismatch") {
    CHECK_THROWS_AS(decompose_error(Matrix::Zero(4, 10), sp), std::invalid_argument);
  }
}

TEST_CASE("restricted set membership") {
  Rng rng(2);
  const GroundTruth t = generate_exact_lowrank(8, 8, 2, 1.0, 3);
  RestrictedSetParams params{2, 0.1, t.factors};
  CHECK_FALSE(in_restricted_set(Matrix::Zero(8, 8), params, t.theta_star).member);
  params.delta = 0.0;
  const Matrix inside = t.factors.U * gaussian_matrix(2, 2, rng) * t.factors.V.transpose();
  CHECK(in_restricted_set(inside, params, t.theta_star).member);
}

TEST_CASE("solver errors fall in the restricted set") {
  int members = 0;
  const int trials = 50;
  for (int i = 0; i < trials; ++i) {
    const GroundTruth t = generate_exact_lowrank(10, 10, 2, 5.0, 100 + i);
    const ObservationSet obs = sample_compressed(t, 300, 1.0, 200 + i);
    SolverConfig cfg;
    cfg.lambda = noise_adjoint_level(obs);
    const SolveResult r = solve(obs, cfg);
    const RestrictedSetParams params{2, 0.0, t.factors};
    if (in_restricted_set(r.theta_hat - t.theta_star, params, t.theta_star).member) ++members;
  }
  CHECK(members >= 0.95 * trials);
}

TEST_CASE("error bounds") {
  CHECK(theorem1_bound(1.0, 4.0, 1.0, 0.0, 0.0) == doctest::Approx(64.0));
  CHECK(theorem1_bound(1e-6, 4.0, 1.0, 0.0, 100.0) == 100.0);
  CHECK(theorem1_bound(0.1, 9.0, 0.5, 0.0, 0.0) == doctest::Approx(32.0 * 0.1 * 3.0 / 0.5));
  CHECK(theorem1_bound(0.1, 1.0, 1.0, 1e6, 0.0) == doctest::Approx(std::sqrt(16.0 * 0.1 * 1e6)));
  CHECK(corollary2_bound(0.3, 0.6, 0.0, 4.0, 0.0) == doctest::Approx(theorem1_bound(0.3, 4.0, 0.6, 0.0, 0.0)));
  for (double q : {0.0, 0.3, 1.0}) CHECK(corollary2_bound(0.5, 0.5, q, 9.0, 0.0) == doctest::Approx(96.0));
  CHECK(corollary2_bound(0.25, 1.0, 1.0, 1.0, 0.0) == doctest::Approx(16.0));
  CHECK_THROWS_AS(theorem1_bound(1.0, 1.0, 0.0, 0.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(corollary2_bound(1.0, 1.0, 2.0, 1.0, 0.0), std::invalid_argument);
}

TEST_CASE("empirical error against the bound") {
  const GroundTruth t = generate_exact_lowrank(20, 20, 2, 10.0, 1);
  const ObservationSet obs = sample_multivar(t, 200, Matrix::Identity(20, 20), 1.0, 2);
  const LambdaChoice lambda = lambda_multivar(1.0, 1.0, 20, 20, 200);
  SolverConfig cfg;
  cfg.lambda = lambda.solver_weight;
  const SolveResult r = solve(obs, cfg);
  const BoundComparison cmp = empirical_vs_bound(obs, r.theta_hat, lambda.solver_weight, 2,
                                                 KappaRule::MultivarSigmaMin20);
  CHECK(cmp.ratio <= 1.0);
  CHECK(cmp.lambda == doctest::Approx(lambda.value));
  CHECK(cmp.kappa == doctest::Approx(1.0 / 20.0));
  CHECK(cmp.bound == doctest::Approx(theorem1_bound(lambda.value, 2.0, 0.05, 0.0, 0.0)));
  CHECK(empirical_vs_bound(obs, t.theta_star, lambda.solver_weight, 2, KappaRule::MultivarSigmaMin20).ratio == 0.0);
}

TEST_CASE("Wishart spectrum check") {
  const RscReport base = check_wishart_spectrum(50, 200, Matrix::Identity(50, 50), 100, 1);
  CHECK(base.pass_rate == 1.0);
  CHECK(base.meets_floor());
  double mean_min = 0;
  for (const auto& row : base.rows) mean_min += row[1] / 100.0;
  CHECK(mean_min == doctest::Approx(std::pow(1.0 - std::sqrt(50.0 / 200.0), 2)).epsilon(0.1));

  // A square design has a vanishing smallest eigenvalue.
  const RscReport edge = check_wishart_spectrum(50, 50, Matrix::Identity(50, 50), 20, 2);
  CHECK(edge.pass_rate <= 0.1);

  Matrix sigma = Matrix::Identity(50, 50);
  sigma(0, 0) = 4.0;
  const RscReport spiked = check_wishart_spectrum(50, 200, sigma, 50, 3);
  double mean_max = 0;
  for (const auto& row : spiked.rows) mean_max += row[2] / 50.0;
  const double ratio = 50.0 / 200.0;
  const double predicted = 4.0 * (1.0 + ratio / 3.0);
  CHECK(std::abs(mean_max - predicted) <= 0.1 * predicted);
  CHECK_THROWS_AS(check_wishart_spectrum(50, 20, Matrix::Identity(50, 50), 10, 1), std::invalid_argument);
}

TEST_CASE("VAR spectrum check") {
  const RscReport iid = check_var_spectrum(Matrix::Zero(20, 20), 1.0, 400, 50, 1);
  CHECK(iid.pass_rate == 1.0);
  const GroundTruth t = generate_exact_lowrank(20, 20, 4, 0.5, 2);
  const RscReport dep = check_var_spectrum(t.theta_star, 1.0, 400, 100, 3);
  CHECK(dep.pass_rate >= 0.95);
  double prev = 0.0;
  for (Eigen::Index n : {40, 400, 4000}) {
    const RscReport r = check_var_spectrum(t.theta_star, 1.0, n, 10, 4);
    double mean_min = 0;
    for (const auto& row : r.rows) mean_min += row[1] / 10.0;
    CHECK(mean_min > prev);
    prev = mean_min;
  }
  CHECK_THROWS_AS(check_var_spectrum(Matrix::Identity(3, 3), 1.0, 10, 5, 1), std::invalid_argument);
}

TEST_CASE("compressed sensing curvature inequality check") {
  const double rhs = 0.25 - 2.0 * std::sqrt(20.0 / 3200.0);
  CHECK(rhs == doctest::Approx(0.0919).epsilon(1e-3));
  const RscReport r = check_prop1(20, 20, 3200, 5, 30, 1);
  CHECK(r.pass_rate == 1.0);
  for (const auto& row : r.rows) CHECK(row[2] > 0.5);
}

TEST_CASE("concentration check") {
  const RscReport r = check_meta_concentration(Matrix::Identity(500, 500), 0.2, 2000, 1);
  CHECK(r.theoretical_floor == doctest::Approx(0.9058).epsilon(1e-3));
  CHECK(r.meets_floor());
  double mean = 0;
  for (const auto& row : r.rows) mean += row[2] / 2000.0;
  CHECK(std::abs(mean - 1.0) <= 0.02);

  const RscReport zero = check_meta_concentration(Matrix::Zero(50, 50), 0.5, 100, 2);
  CHECK(zero.pass_rate == 1.0);
  CHECK_THROWS_AS(check_meta_concentration(Matrix::Identity(4, 4), 0.5, 10, 1), std::invalid_argument);
}

TEST_CASE("reports are independent of the worker count") {
  const RscReport a = check_prop1(6, 6, 100, 8, 10, 5, 1);
  const RscReport b = check_prop1(6, 6, 100, 8, 10, 5, 3);
  CHECK(a.rows == b.rows);
}

TEST_CASE("report output") {
  const RscReport r = check_meta_concentration(Matrix::Identity(100, 100), 0.5, 20, 1);
  const std::string text = summary_text(r);
  CHECK(text.find("check: meta") != std::string::npos);
  const auto path = std::filesystem::temp_directory_path() / "lowrank_report.csv";
  write_report_csv(r, path.string());
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  CHECK(header == "trial,deviation,norm_sq_over_n,pass");
  int lines = 0;
  for (std::string line; std::getline(in, line);) ++lines;
  CHECK(lines == 20);
  std::filesystem::remove(path);
}
