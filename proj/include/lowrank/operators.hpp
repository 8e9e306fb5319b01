#pragma once

#include <memory>
#include <string>
#include <vector>

#include "lowrank/matcore.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

enum class ModelKind { Identity, Multivar, Var, Compressed, Dense };

std::string to_string(ModelKind kind);
ModelKind model_kind_from_string(const std::string& name);

/// Linear observation map 𝔛 from k×p matrices to length-N vectors,
/// 𝔛(Θ)ᵢ = ⟨⟨Xᵢ, Θ⟩⟩, with adjoint 𝔛*(u) = Σ uᵢ Xᵢ.
///
/// Implementations are immutable after construction.
class LinearMatrixOperator {
 public:
  virtual ~LinearMatrixOperator() = default;

  Eigen::Index rows() const { return k_; }
  Eigen::Index cols() const { return p_; }
  Eigen::Index num_observations() const { return n_obs_; }

  virtual ModelKind kind() const = 0;
  std::string description() const;

  virtual Vector apply(const Matrix& theta) const = 0;
  virtual Matrix adjoint(const Vector& u) const = 0;

  /// 𝔛*(𝔛(Θ)).
  virtual Matrix normal(const Matrix& theta) const { return adjoint(apply(theta)); }
  /// True when normal() is much cheaper than an apply/adjoint pair.
  virtual bool cheap_normal() const { return false; }

  /// Observation matrix Xᵢ (k×p).
  virtual Matrix observation_matrix(Eigen::Index i) const = 0;

  /// A draw of 𝔛*(ε) with ε ~ N(0, sd²·I_N). Subclasses may sample from the
  /// same law without forming ε.
  virtual Matrix adjoint_of_gaussian_noise(double sd, Rng& rng) const;

 protected:
  LinearMatrixOperator(Eigen::Index k, Eigen::Index p, Eigen::Index n_obs);
  void check_theta(const Matrix& theta) const;
  void check_vector(const Vector& u) const;

 private:
  Eigen::Index k_, p_, n_obs_;
};

using OperatorPtr = std::shared_ptr<const LinearMatrixOperator>;

/// One observation per entry: N = kp, observation i reads entry
/// (i mod k, i div k).
class IdentityOperator final : public LinearMatrixOperator {
 public:
  IdentityOperator(Eigen::Index k, Eigen::Index p);
  ModelKind kind() const override { return ModelKind::Identity; }
  Vector apply(const Matrix& theta) const override;
  Matrix adjoint(const Vector& u) const override;
  Matrix normal(const Matrix& theta) const override;
  bool cheap_normal() const override { return true; }
  Matrix observation_matrix(Eigen::Index i) const override;
};

/// Observations Xᵢ = e_b x_aᵀ built from the rows x_a of an n×p design
/// matrix, i = a + b·n (0-based). Used by multivariate regression
/// (N = kn) and vector autoregression (k = p, design rows Z_1…Z_n).
///
/// apply(Θ) is X·Θᵀ flattened column-major; adjoint(u) = Uᵀ·X with U the
/// n×k unstacking of u.
class DesignOperator final : public LinearMatrixOperator {
 public:
  DesignOperator(Matrix design, Eigen::Index k, ModelKind kind);

  ModelKind kind() const override { return kind_; }
  Vector apply(const Matrix& theta) const override;
  Matrix adjoint(const Vector& u) const override;
  Matrix normal(const Matrix& theta) const override;
  bool cheap_normal() const override { return true; }
  Matrix observation_matrix(Eigen::Index i) const override;
  Matrix adjoint_of_gaussian_noise(double sd, Rng& rng) const override;

  const Matrix& design() const { return design_; }
  const Matrix& gram() const { return gram_; }
  Eigen::Index samples() const { return design_.rows(); }

 private:
  Matrix design_;
  Matrix gram_;
  Matrix gram_factor_;  // upper Cholesky-like factor R with RᵀR = gram
  ModelKind kind_;
};

/// Observation matrices stored explicitly: row i of `rows` is vec(Xᵢ)
/// (column-major flattening of the k×p matrix).
class MaterializedOperator final : public LinearMatrixOperator {
 public:
  MaterializedOperator(Matrix rows, Eigen::Index k, Eigen::Index p, ModelKind kind);

  ModelKind kind() const override { return kind_; }
  Vector apply(const Matrix& theta) const override;
  Matrix adjoint(const Vector& u) const override;
  Matrix observation_matrix(Eigen::Index i) const override;

  const Matrix& stacked() const { return rows_; }

 private:
  Matrix rows_;
  ModelKind kind_;
};

/// Explicit copy of any operator's observation matrices.
std::shared_ptr<const MaterializedOperator> materialize(const LinearMatrixOperator& op);

/// Observations reordered: new observation j is old observation perm[j].
std::shared_ptr<const MaterializedOperator> permute(const LinearMatrixOperator& op,
                                                    const std::vector<Eigen::Index>& perm);

}  // namespace lowrank
