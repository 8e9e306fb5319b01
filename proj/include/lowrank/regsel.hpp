#pragma once

#include <cstdint>
#include <map>
#include <string>

#include "lowrank/models.hpp"

namespace lowrank {

enum class LambdaRule { MultivarCor3, VarCor4, CompressedLemma6, GenericAdjoint, Manual };

std::string to_string(LambdaRule rule);
LambdaRule lambda_rule_from_string(const std::string& name);

/// A regularization weight and the rule that produced it.
///
/// `value` is the rule's formula. The regression and VAR formulas are stated
/// for the per-sample objective (1/2n)‖Y − XΘᵀ‖_F² + λ‖Θ‖₁, which is k (resp.
/// p) times the per-observation objective the solver minimizes; `solver_weight`
/// is the matching weight for (1/2N)‖y − 𝔛(Θ)‖² + λ‖Θ‖₁.
struct LambdaChoice {
  double value = 0.0;
  double solver_weight = 0.0;
  LambdaRule rule = LambdaRule::Manual;
  std::map<std::string, double> inputs;
};

/// 10·ν·√σmax(Σ)·√((k+p)/n); solver weight value/k.
LambdaChoice lambda_multivar(double nu, double sigma_max, Eigen::Index k, Eigen::Index p, Eigen::Index n);

/// 80·‖Σ‖op/(1−γ)·√(p/n); solver weight value/p.
LambdaChoice lambda_var(double sigma_opnorm, double gamma, Eigen::Index p, Eigen::Index n);

/// 8ν(√(k/N) + √(p/N)), twice the high-probability bound on ‖𝔛*(ε)‖op/N.
LambdaChoice lambda_compressed(double nu, Eigen::Index k, Eigen::Index p, Eigen::Index n_obs);

/// Smallest weight returned by lambda_generic.
inline constexpr double kLambdaFloor = 1e-12;

/// Twice the empirical 95th percentile of ‖𝔛*(ε)‖op/N over `draws` synthetic
/// noise vectors ε ~ N(0, ν²I) against the observed operator. Values are per
/// observation, so value == solver_weight.
LambdaChoice lambda_generic(const ObservationSet& obs, int draws, std::uint64_t seed, double floor = kLambdaFloor);

LambdaChoice lambda_manual(double value);

/// Number of scalar observations each sample contributes: k (regression),
/// p (VAR), 1 otherwise. Converts between per-sample and per-observation weights.
double observations_per_sample(const LinearMatrixOperator& op);

/// 2‖𝔛*(ε)‖op/N for the realized noise of `obs`.
double noise_adjoint_level(const ObservationSet& obs);

}  // namespace lowrank
