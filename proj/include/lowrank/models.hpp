#pragma once

#include <cstdint>
#include <variant>

#include "lowrank/matcore.hpp"
#include "lowrank/operators.hpp"

namespace lowrank {

struct ExactRank {
  Eigen::Index r;
};

struct NearLowRank {
  double q;
  double radius;  // R_q
};

/// A ground-truth matrix Θ* with the description of how it was generated.
struct GroundTruth {
  Matrix theta_star;
  std::variant<ExactRank, NearLowRank> kind;
  /// Top singular subspaces of Θ* (rank r for ExactRank, full rank m for NearLowRank).
  SubspacePair factors;
};

/// Rank-r Θ* = scale·U·Vᵀ with U, V Grassmann-uniform (orthonormalized Gaussians).
GroundTruth generate_exact_lowrank(Eigen::Index k, Eigen::Index p, Eigen::Index r, double scale,
                                   std::uint64_t seed);

/// Θ* with σᵢ = c·i^(−1/q), c chosen so that Σσᵢ^q = R_q; Grassmann-uniform subspaces.
GroundTruth generate_near_lowrank(Eigen::Index k, Eigen::Index p, double q, double radius,
                                  std::uint64_t seed);

/// Σᵢ σᵢ(Θ)^q (q = 0 counts nonzero singular values).
double lq_radius(const Matrix& theta, double q);

// ---------------------------------------------------------------------------
// Model parameter records.

struct IdentityModel {};

struct MultivarModel {
  Matrix sigma_x;  // p×p covariate covariance
  Eigen::Index n = 0;
};

/// Stable VAR(1) process Z_{t+1} = Θ*Z_t + W_t with W_t ~ N(0, ν²I).
struct VarParams {
  Matrix theta_star;
  double nu = 1.0;
  Eigen::Index n = 0;
  double gamma = 0.0;  // bound on ‖Θ*‖op, < 1
  Matrix sigma;        // stationary covariance
};

struct CompressedModel {};

using ModelParams = std::variant<IdentityModel, MultivarModel, VarParams, CompressedModel>;

/// Noisy linear observations y = 𝔛(Θ*) + ε of a known ground truth.
struct ObservationSet {
  Vector y;
  OperatorPtr op;
  double noise_level = 0.0;
  std::uint64_t seed = 0;
  ModelParams model_params;
  Matrix theta_star;  // ground truth, empty if unknown
  Vector noise;       // realized ε, empty if unknown

  ModelKind kind() const { return op->kind(); }
  Eigen::Index num_observations() const { return op->num_observations(); }
};

/// Throws unless `obs` is internally consistent (y length = N, finite data).
void validate(const ObservationSet& obs);

// ---------------------------------------------------------------------------

std::shared_ptr<const IdentityOperator> identity_operator(Eigen::Index k, Eigen::Index p);
std::shared_ptr<const DesignOperator> multivar_operator(const Matrix& design, Eigen::Index k);

/// Observations y = op(Θ) + ε with ε ~ N(0, ν²I), for an arbitrary operator.
ObservationSet observe(OperatorPtr op, const Matrix& theta, double nu, std::uint64_t seed);

/// Symmetric PSD square root S (S·S = Σ) via eigendecomposition. Throws if Σ
/// is not symmetric positive definite.
Matrix symmetric_sqrt(const Matrix& sigma);

ObservationSet sample_multivar(const GroundTruth& truth, Eigen::Index n, const Matrix& sigma_x, double nu,
                               std::uint64_t seed);

/// Unique symmetric positive definite Σ with Σ = ΘΣΘᵀ + ν²I. Requires ‖Θ‖op < 1.
Matrix solve_lyapunov(const Matrix& theta, double nu);

/// VarParams with Σ filled in from solve_lyapunov; validates stability against gamma.
VarParams make_var_params(const Matrix& theta_star, double nu, Eigen::Index n, double gamma);

ObservationSet sample_var(const VarParams& params, std::uint64_t seed);

/// Default memory ceiling for materialized compressed-sensing operators (2 GiB).
inline constexpr double kDefaultOperatorBudgetBytes = 2.0 * 1024 * 1024 * 1024;

ObservationSet sample_compressed(const GroundTruth& truth, Eigen::Index n_obs, double nu, std::uint64_t seed,
                                 double budget_bytes = kDefaultOperatorBudgetBytes);

}  // namespace lowrank
