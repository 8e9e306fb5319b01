#include <doctest.h>

#include <numeric>

#include "lowrank/models.hpp"
#include "lowrank/operators.hpp"
#include "lowrank/random.hpp"

using namespace lowrank;

namespace {

double inner(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// Reference apply: y_i = <X_i, theta> using the observation matrices directly.
Vector apply_by_definition(const LinearMatrixOperator& op, const Matrix& theta) {
  Vector y(op.num_observations());
  for (Eigen::Index i = 0; i < y.size(); ++i) y(i) = inner(op.observation_matrix(i), theta);
  return y;
}

void check_adjoint(const LinearMatrixOperator& op, Rng& rng) {
  for (int t = 0; t < 5; ++t) {
    const Matrix theta = gaussian_matrix(op.rows(), op.cols(), rng);
    const Vector u = gaussian_vector(op.num_observations(), rng);
    const double lhs = op.apply(theta).dot(u);
    const double rhs = inner(theta, op.adjoint(u));
    CHECK(std::abs(lhs - rhs) <= 1e-10 * std::max(1.0, std::abs(lhs)));
  }
}

}  // namespace

TEST_CASE("model names") {
  CHECK(model_kind_from_string("regression") == ModelKind::Multivar);
  CHECK(model_kind_from_string("var") == ModelKind::Var);
  CHECK(model_kind_from_string("compressed") == ModelKind::Compressed);
  CHECK(to_string(ModelKind::Multivar) == "regression");
  CHECK_THROWS_AS(model_kind_from_string("bogus"), std::invalid_argument);
}

TEST_CASE("identity operator") {
  Rng rng(1);
  const IdentityOperator op(4, 3);
  CHECK(op.num_observations() == 12);
  const Matrix theta = gaussian_matrix(4, 3, rng);
  CHECK((op.adjoint(op.apply(theta)) - theta).norm() == 0.0);
  CHECK((op.normal(theta) / 12.0 - theta / 12.0).norm() == 0.0);
  CHECK(op.apply(theta).norm() == doctest::Approx(theta.norm()));
  CHECK((apply_by_definition(op, theta) - op.apply(theta)).norm() <= 1e-14);
  check_adjoint(op, rng);
}

TEST_CASE("design operator") {
  Rng rng(2);
  SUBCASE("trace identity <x e_b^T, theta> = (theta x)_b") {
    const Matrix theta = gaussian_matrix(3, 5, rng);
    const Vector x = gaussian_vector(5, rng);
    for (int b = 0; b < 3; ++b) {
      Matrix xb = Matrix::Zero(3, 5);
      xb.row(b) = x.transpose();
      CHECK(inner(xb, theta) == doctest::Approx((theta * x)(b)));
    }
  }
  SUBCASE("single sample, single response") {
    Matrix design = Matrix::Zero(1, 4);
    design(0, 0) = 1.0;
    const DesignOperator op(design, 1, ModelKind::Multivar);
    const Matrix theta = gaussian_matrix(1, 4, rng);
    CHECK(op.apply(theta)(0) == theta(0, 0));
  }
  SUBCASE("apply, adjoint and normal agree with the observation matrices") {
    const Matrix design = gaussian_matrix(7, 4, rng);
    const DesignOperator op(design, 3, ModelKind::Multivar);
    CHECK(op.num_observations() == 21);
    check_adjoint(op, rng);
    const Matrix theta = gaussian_matrix(3, 4, rng);
    CHECK((apply_by_definition(op, theta) - op.apply(theta)).norm() <= 1e-12 * theta.norm());
    CHECK((op.normal(theta) - op.adjoint(op.apply(theta))).norm() <= 1e-10 * op.normal(theta).norm());
    const auto dense = materialize(op);
    CHECK((dense->apply(theta) - op.apply(theta)).norm() <= 1e-12 * theta.norm());
    const Vector u = gaussian_vector(21, rng);
    CHECK((dense->adjoint(u) - op.adjoint(u)).norm() <= 1e-12 * u.norm());
  }
  SUBCASE("noise adjoint sample has the law of the adjoint of white noise") {
    const Matrix design = gaussian_matrix(30, 3, rng);
    const DesignOperator op(design, 2, ModelKind::Multivar);
    // Covariance of vec(adjoint(eps)) is I_k (x) gram; compare second moments.
    const int draws = 20000;
    Matrix fast = Matrix::Zero(3, 3), slow = Matrix::Zero(3, 3);
    for (int d = 0; d < draws; ++d) {
      const Matrix a = op.adjoint_of_gaussian_noise(1.0, rng);
      const Matrix b = op.adjoint(gaussian_vector(op.num_observations(), rng));
      fast += a.transpose() * a;
      slow += b.transpose() * b;
    }
    const Matrix expected = 2.0 * op.gram();
    CHECK((fast / draws - expected).norm() <= 0.05 * expected.norm());
    CHECK((slow / draws - expected).norm() <= 0.05 * expected.norm());
  }
  SUBCASE("shape checks") {
    const DesignOperator op(gaussian_matrix(5, 4, rng), 2, ModelKind::Multivar);
    CHECK_THROWS_AS(op.apply(Matrix::Zero(3, 4)), std::invalid_argument);
    CHECK_THROWS_AS(op.adjoint(Vector::Zero(3)), std::invalid_argument);
  }
}

TEST_CASE("materialized operator and permutation") {
  Rng rng(4);
  const Matrix rows = gaussian_matrix(15, 6, rng);
  const MaterializedOperator op(rows, 2, 3, ModelKind::Compressed);
  check_adjoint(op, rng);
  const Matrix theta = gaussian_matrix(2, 3, rng);
  CHECK((apply_by_definition(op, theta) - op.apply(theta)).norm() <= 1e-12);

  std::vector<Eigen::Index> perm(15);
  std::iota(perm.begin(), perm.end(), 0);
  std::reverse(perm.begin(), perm.end());
  const auto shuffled = permute(op, perm);
  const Vector y = op.apply(theta), ys = shuffled->apply(theta);
  for (Eigen::Index i = 0; i < 15; ++i) CHECK(ys(i) == y(perm[i]));
  CHECK((shuffled->normal(theta) - op.normal(theta)).norm() <= 1e-12);
}
