#include "lowrank/operators.hpp"

#include <algorithm>
#include <stdexcept>

namespace lowrank {

std::string to_string(ModelKind kind) {
  switch (kind) {
    case ModelKind::Identity: return "identity";
    case ModelKind::Multivar: return "regression";
    case ModelKind::Var: return "var";
    case ModelKind::Compressed: return "compressed";
    case ModelKind::Dense: return "dense";
  }
  return "unknown";
}

ModelKind model_kind_from_string(const std::string& name) {
  if (name == "identity") return ModelKind::Identity;
  if (name == "regression" || name == "multivar") return ModelKind::Multivar;
  if (name == "var") return ModelKind::Var;
  if (name == "compressed" || name == "cs") return ModelKind::Compressed;
  if (name == "dense") return ModelKind::Dense;
  throw std::invalid_argument("unknown model '" + name + "'");
}

LinearMatrixOperator::LinearMatrixOperator(Eigen::Index k, Eigen::Index p, Eigen::Index n_obs)
    : k_(k), p_(p), n_obs_(n_obs) {
  if (k < 1 || p < 1 || n_obs < 1) {
    throw std::invalid_argument("observation operator: dimensions must be positive");
  }
}

std::string LinearMatrixOperator::description() const {
  return to_string(kind()) + " k=" + std::to_string(k_) + " p=" + std::to_string(p_) +
         " N=" + std::to_string(n_obs_);
}

void LinearMatrixOperator::check_theta(const Matrix& theta) const {
  if (theta.rows() != k_ || theta.cols() != p_) {
    throw std::invalid_argument("observation operator: matrix shape does not match operator");
  }
}

void LinearMatrixOperator::check_vector(const Vector& u) const {
  if (u.size() != n_obs_) {
    throw std::invalid_argument("observation operator: vector length does not match N");
  }
}

Matrix LinearMatrixOperator::adjoint_of_gaussian_noise(double sd, Rng& rng) const {
  return adjoint(gaussian_vector(n_obs_, rng, sd));
}

// ---------------------------------------------------------------------------

IdentityOperator::IdentityOperator(Eigen::Index k, Eigen::Index p) : LinearMatrixOperator(k, p, k * p) {}

Vector IdentityOperator::apply(const Matrix& theta) const {
  check_theta(theta);
  return Eigen::Map<const Vector>(theta.data(), theta.size());
}

Matrix IdentityOperator::adjoint(const Vector& u) const {
  check_vector(u);
  return Eigen::Map<const Matrix>(u.data(), rows(), cols());
}

Matrix IdentityOperator::normal(const Matrix& theta) const {
  check_theta(theta);
  return theta;
}

Matrix IdentityOperator::observation_matrix(Eigen::Index i) const {
  Matrix x = Matrix::Zero(rows(), cols());
  x(i % rows(), i / rows()) = 1.0;
  return x;
}

// ---------------------------------------------------------------------------

DesignOperator::DesignOperator(Matrix design, Eigen::Index k, ModelKind kind)
    : LinearMatrixOperator(k, design.cols(), design.rows() * k), design_(std::move(design)), kind_(kind) {
  require_finite(design_, "design operator");
  gram_ = design_.transpose() * design_;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(gram_);
  if (eig.info() != Eigen::Success) throw NumericError("design operator: gram eigensolver failed");
  const Vector root = eig.eigenvalues().cwiseMax(0.0).cwiseSqrt();
  gram_factor_ = eig.eigenvectors() * root.asDiagonal() * eig.eigenvectors().transpose();
}

Vector DesignOperator::apply(const Matrix& theta) const {
  check_theta(theta);
  const Matrix fitted = design_ * theta.transpose();  // n×k
  return Eigen::Map<const Vector>(fitted.data(), fitted.size());
}

Matrix DesignOperator::adjoint(const Vector& u) const {
  check_vector(u);
  const Eigen::Map<const Matrix> stacked(u.data(), design_.rows(), rows());
  return stacked.transpose() * design_;
}

Matrix DesignOperator::normal(const Matrix& theta) const {
  check_theta(theta);
  return theta * gram_;
}

Matrix DesignOperator::observation_matrix(Eigen::Index i) const {
  const Eigen::Index n = design_.rows();
  Matrix x = Matrix::Zero(rows(), cols());
  x.row(i / n) = design_.row(i % n);
  return x;
}

Matrix DesignOperator::adjoint_of_gaussian_noise(double sd, Rng& rng) const {
  // Row b of 𝔛*(ε) is (Xᵀε_b)ᵀ ~ N(0, sd²·XᵀX), independent across b.
  return gaussian_matrix(rows(), cols(), rng, sd) * gram_factor_;
}

// ---------------------------------------------------------------------------

MaterializedOperator::MaterializedOperator(Matrix rows, Eigen::Index k, Eigen::Index p, ModelKind kind)
    : LinearMatrixOperator(k, p, rows.rows()), rows_(std::move(rows)), kind_(kind) {
  if (rows_.cols() != k * p) {
    throw std::invalid_argument("materialized operator: row length must equal k*p");
  }
  require_finite(rows_, "materialized operator");
}

Vector MaterializedOperator::apply(const Matrix& theta) const {
  check_theta(theta);
  return rows_ * Eigen::Map<const Vector>(theta.data(), theta.size());
}

Matrix MaterializedOperator::adjoint(const Vector& u) const {
  check_vector(u);
  const Vector flat = rows_.transpose() * u;
  return Eigen::Map<const Matrix>(flat.data(), rows(), cols());
}

Matrix MaterializedOperator::observation_matrix(Eigen::Index i) const {
  const Vector flat = rows_.row(i).transpose();
  return Eigen::Map<const Matrix>(flat.data(), rows(), cols());
}

std::shared_ptr<const MaterializedOperator> materialize(const LinearMatrixOperator& op) {
  std::vector<Eigen::Index> identity(op.num_observations());
  for (Eigen::Index i = 0; i < op.num_observations(); ++i) identity[i] = i;
  return permute(op, identity);
}

std::shared_ptr<const MaterializedOperator> permute(const LinearMatrixOperator& op,
                                                    const std::vector<Eigen::Index>& perm) {
  const Eigen::Index n_obs = op.num_observations();
  if (static_cast<Eigen::Index>(perm.size()) != n_obs) {
    throw std::invalid_argument("permute: permutation length must equal N");
  }
  std::vector<bool> seen(n_obs, false);
  Matrix rows(n_obs, op.rows() * op.cols());
  for (Eigen::Index j = 0; j < n_obs; ++j) {
    const Eigen::Index src = perm[j];
    if (src < 0 || src >= n_obs || seen[src]) throw std::invalid_argument("permute: not a permutation");
    seen[src] = true;
    const Matrix x = op.observation_matrix(src);
    rows.row(j) = Eigen::Map<const Vector>(x.data(), x.size()).transpose();
  }
  const ModelKind kind = op.kind() == ModelKind::Compressed ? ModelKind::Compressed : ModelKind::Dense;
  return std::make_shared<MaterializedOperator>(std::move(rows), op.rows(), op.cols(), kind);
}

}  // namespace lowrank
