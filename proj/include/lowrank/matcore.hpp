#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace lowrank {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Numerical tolerances shared by every module.
namespace tol {
/// Relative Frobenius residual of U·diag(s)·Vᵀ against the input.
inline constexpr double kReconstruction = 1e-10;
/// Max-abs entry of UᵀU − I and VᵀV − I.
inline constexpr double kOrthonormality = 1e-10;
/// Singular values at or below kRank·σ₁ count as zero.
inline constexpr double kRank = 1e-10;
}  // namespace tol

/// Raised when a factorization or an iteration cannot produce a trustworthy result.
class NumericError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Full (thin-shaped) singular value decomposition M = U·diag(s)·Vᵀ.
///
/// U is k×m, V is p×m with m = min(k,p); s is nonincreasing and nonnegative.
/// Column signs are normalized so the largest-magnitude entry of every U
/// column is positive (V columns are flipped alongside).
struct SvdFactors {
  Matrix U;
  Vector s;
  Matrix V;

  Matrix reconstruct() const;
};

/// Pair of column-orthonormal bases spanning a rank-r column space (U, k×r)
/// and row space (V, p×r).
struct SubspacePair {
  Matrix U;
  Matrix V;

  Eigen::Index rank() const { return U.cols(); }
};

/// Throws std::invalid_argument if any entry is NaN or infinite.
void require_finite(const Matrix& m, const char* what);

SvdFactors svd(const Matrix& m);

double nuclear_norm(const Matrix& m);
double operator_norm(const Matrix& m);
double frobenius_norm(const Matrix& m);

/// Number of singular values above rel_tol·σ₁.
Eigen::Index numerical_rank(const Vector& singular_values, double rel_tol = tol::kRank);
Eigen::Index numerical_rank(const Matrix& m, double rel_tol = tol::kRank);

/// Singular value soft-thresholding: the proximal map of tau·‖·‖₁ (nuclear norm).
/// Singular values equal to tau map to exactly zero.
Matrix svt(const Matrix& m, double tau);

/// Top-r singular subspaces of m.
SubspacePair top_subspaces(const Matrix& m, Eigen::Index r);

/// Column-orthonormal basis of the range of a full-column-rank matrix
/// (Householder QR, thin Q, signs fixed so diag(R) ≥ 0).
Matrix orthonormal_basis(const Matrix& m);

/// Max-abs deviation of QᵀQ from the identity.
double orthonormality_error(const Matrix& q);

class LinearMatrixOperator;

/// Power-iteration estimate of the largest eigenvalue of Θ ↦ 𝔛*(𝔛(Θ))/N.
/// Nondecreasing in `iters` for a fixed seed.
double composed_operator_norm(const LinearMatrixOperator& op, int iters, std::uint64_t seed);

}  // namespace lowrank
