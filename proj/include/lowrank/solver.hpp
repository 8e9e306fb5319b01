#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "lowrank/models.hpp"

namespace lowrank {

/// Settings for minimizing (1/2N)‖y − 𝔛(Θ)‖₂² + λ‖Θ‖₁.
struct SolverConfig {
  double lambda = 0.0;             // weight per scalar observation
  int max_iters = 5000;
  double rel_tol = 1e-9;           // stop when |ΔF| ≤ rel_tol·|F| and ‖Θₖ₊₁ − Θₖ‖_F/step ≤ 1e-4·λ
  std::optional<double> step;      // fixed step; unset means 0.99/L̂
  bool acceleration = true;
  int power_iters = 30;            // power iterations behind L̂
  std::uint64_t power_seed = 0x5eedULL;

  void validate() const;
};

struct SolveResult {
  Matrix theta_hat;
  std::vector<double> objective_trace;  // F at the initial point, then after each iteration
  int iterations = 0;
  bool converged = false;
  double lambda = 0.0;
  double step = 0.0;
  /// max(‖(1/N)𝔛*(𝔛(Θ̂) − y)‖op − λ, 0).
  double optimality_residual = 0.0;
  /// Deviation of the gradient G from −λ·UVᵀ on Θ̂'s singular subspaces:
  /// max(‖UᵀG + λVᵀ‖op, ‖GV + λU‖op); zero when Θ̂ = 0.
  double alignment_residual = 0.0;
  /// ‖𝔛(Θ̂) − y‖₂ / ‖y‖₂ (0 when y = 0).
  double data_residual = 0.0;
};

/// Continuation schedule for the noiseless (equality-constrained) problem.
struct ContinuationSchedule {
  std::optional<double> lambda0;  // default ‖(1/N)𝔛*(y)‖op / 2
  double decay = 0.5;
  int stages = 20;
};

/// Value of (1/2N)‖y − 𝔛(Θ)‖² + λ‖Θ‖₁.
double objective(const LinearMatrixOperator& op, const Vector& y, const Matrix& theta, double lambda);

/// Smooth-part gradient (1/N)𝔛*(𝔛(Θ) − y).
Matrix smooth_gradient(const LinearMatrixOperator& op, const Vector& y, const Matrix& theta);

/// Accelerated proximal gradient with singular value thresholding. The
/// momentum is reset (and the step redone from the last iterate) whenever the
/// objective would increase, so the recorded trace is nonincreasing.
SolveResult solve(const LinearMatrixOperator& op, const Vector& y, const SolverConfig& cfg,
                  const Matrix* warm_start = nullptr);
SolveResult solve(const ObservationSet& obs, const SolverConfig& cfg, const Matrix* warm_start = nullptr);

/// Noiseless recovery by continuation on λ with warm starts.
/// `cfg.lambda` is ignored; the other fields apply to every stage.
SolveResult solve_noiseless(const ObservationSet& obs, const ContinuationSchedule& schedule,
                            const SolverConfig& cfg = {});

/// Fills optimality_residual, alignment_residual and data_residual of `result`
/// for the estimate it holds.
void certify(const LinearMatrixOperator& op, const Vector& y, SolveResult& result);

}  // namespace lowrank
