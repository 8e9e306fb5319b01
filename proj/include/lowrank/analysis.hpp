#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "lowrank/models.hpp"

namespace lowrank {

// ---------------------------------------------------------------------------
// Error decomposition relative to a pair of rank-r subspaces (U, V).
//
// With P_U = UUᵀ and P_V = VVᵀ, Δ″ = (I − P_U)·Δ·(I − P_V) collects the part of
// Δ whose row and column spaces are orthogonal to V and U; Δ′ = Δ − Δ″ has
// rank at most 2r.

struct ErrorDecomposition {
  Matrix delta_prime;
  Matrix delta_dblprime;
  Eigen::Index r = 0;
};

ErrorDecomposition decompose_error(const Matrix& delta, const SubspacePair& subspaces);

/// Π_M(Θ) = P_U·Θ·P_V.
Matrix project_model(const Matrix& theta, const SubspacePair& subspaces);
/// Π_M⊥(Θ) = (I − P_U)·Θ·(I − P_V).
Matrix project_model_perp(const Matrix& theta, const SubspacePair& subspaces);

struct RestrictedSetParams {
  Eigen::Index r = 0;
  double delta = 0.0;  // Frobenius floor δ
  SubspacePair subspaces;
};

struct RestrictedSetMembership {
  bool member = false;
  double frobenius_margin = 0.0;  // ‖Δ‖_F − δ
  double cone_margin = 0.0;       // 3‖Δ′‖₁ + 4‖Π_M⊥(Θ*)‖₁ − ‖Δ″‖₁
};

RestrictedSetMembership in_restricted_set(const Matrix& delta, const RestrictedSetParams& params,
                                          const Matrix& theta_star);

// ---------------------------------------------------------------------------
// Error bounds. λ and κ must use the same normalization.

/// max{δ, 32λ√r/κ, (16λ·approx/κ)^½} with approx = ‖Π_M⊥(Θ*)‖₁.
double theorem1_bound(double lambda, double r, double kappa, double approx_term, double delta);

/// max{δ, 32·√R_q·(λ/κ)^(1−q/2)} for Θ* in the ℓq ball of radius R_q.
double corollary2_bound(double lambda, double kappa, double q, double radius, double delta);

/// Curvature constants from the corollary proofs, in per-sample normalization.
enum class KappaRule {
  MultivarSigmaMin20,  // σmin(Σ)/20
  VarSigmaMin4,        // σmin(Σ)/4
  CompressedEighth,    // 1/8
};

double kappa_value(KappaRule rule, const ObservationSet& obs);
KappaRule default_kappa_rule(ModelKind kind);

/// δ = R_q·(√(k/N) + √(p/N))^(2−q) used for the compressed sensing bound.
double compressed_tolerance(double radius, double q, Eigen::Index k, Eigen::Index p, Eigen::Index n_obs);

struct BoundComparison {
  double frob_error = 0.0;
  double bound = 0.0;
  double ratio = 0.0;
  double kappa = 0.0;
  double lambda = 0.0;  // per-sample weight the bound was evaluated with
};

/// Frobenius error of an estimate against the exact-rank error bound.
/// `solver_weight` is the per-observation λ handed to the solver; it is
/// rescaled by observations_per_sample() to match κ.
BoundComparison empirical_vs_bound(const ObservationSet& obs, const Matrix& theta_hat, double solver_weight,
                                   Eigen::Index r, KappaRule rule, double delta = 0.0);

// ---------------------------------------------------------------------------
// Frequency checks of the probabilistic conditions.

enum class CheckKind { MultivarLemma2, VarLemma4, CompressedProp1, MetaLemma8 };

std::string to_string(CheckKind kind);

struct RscReport {
  CheckKind kind{};
  int trials = 0;
  int passes = 0;
  double pass_rate = 0.0;
  /// Probability lower bound from the theory; 0 when the theory gives none
  /// with explicit constants.
  double theoretical_floor = 0.0;
  std::string note;
  std::vector<std::string> columns;  // per-trial statistics
  std::vector<std::vector<double>> rows;

  /// Binomial standard error of an event with probability `theoretical_floor`.
  double floor_standard_error() const;
  /// empirical ≥ floor − 3·SE.
  bool meets_floor() const;
};

RscReport check_wishart_spectrum(Eigen::Index p, Eigen::Index n, const Matrix& sigma, int trials,
                                 std::uint64_t seed, unsigned workers = 1);

RscReport check_var_spectrum(const Matrix& theta_star, double nu, Eigen::Index n, int trials, std::uint64_t seed,
                             unsigned workers = 1);

/// Test matrices cycle through three families (all scaled to unit Frobenius
/// norm): rank one, random rank in [1, min(k,p)] with Grassmann-uniform
/// subspaces and random spectrum, and dense Gaussian. Sampling cannot certify
/// the "for all Θ" statement; a pass only means no violation was found.
RscReport check_prop1(Eigen::Index k, Eigen::Index p, Eigen::Index n_obs, int trials, int test_matrices,
                      std::uint64_t seed, unsigned workers = 1);

/// Deviation |‖Y‖² − tr Q|/n ≤ 4t‖Q‖op for Y ~ N(0, Q), Q n×n PSD.
RscReport check_meta_concentration(const Matrix& q, double t, int trials, std::uint64_t seed, unsigned workers = 1);

void write_report_csv(const RscReport& report, const std::string& path);
std::string summary_text(const RscReport& report);

}  // namespace lowrank
