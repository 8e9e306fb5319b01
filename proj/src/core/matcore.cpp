#include "lowrank/matcore.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include "lowrank/operators.hpp"

namespace lowrank {

Matrix SvdFactors::reconstruct() const { return U * s.asDiagonal() * V.transpose(); }

void require_finite(const Matrix& m, const char* what) {
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(what) + ": matrix contains NaN or Inf entries");
  }
}

SvdFactors svd(const Matrix& m) {
  require_finite(m, "svd");
  const Eigen::Index k = m.rows(), p = m.cols();
  if (k == 0 || p == 0) throw std::invalid_argument("svd: empty matrix");

  auto usable = [](const SvdFactors& f) { return f.U.allFinite() && f.V.allFinite() && f.s.allFinite(); };
  SvdFactors f;
  Eigen::BDCSVD<Matrix> dec(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
  if (dec.info() == Eigen::Success) f = {dec.matrixU(), dec.singularValues(), dec.matrixV()};
  if (dec.info() != Eigen::Success || !usable(f)) {
    Eigen::JacobiSVD<Matrix> jac(m, Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (jac.info() != Eigen::Success) throw NumericError("svd: factorization did not converge");
    f = {jac.matrixU(), jac.singularValues(), jac.matrixV()};
    if (!usable(f)) throw NumericError("svd: factorization produced non-finite factors");
  }

  for (Eigen::Index j = 0; j < f.U.cols(); ++j) {
    Eigen::Index arg = 0;
    f.U.col(j).cwiseAbs().maxCoeff(&arg);
    if (f.U(arg, j) < 0) {
      f.U.col(j) *= -1.0;
      f.V.col(j) *= -1.0;
    }
  }
  return f;
}

double nuclear_norm(const Matrix& m) { return svd(m).s.sum(); }

double operator_norm(const Matrix& m) {
  const Vector s = svd(m).s;
  return s.size() ? s(0) : 0.0;
}

double frobenius_norm(const Matrix& m) {
  require_finite(m, "frobenius_norm");
  return m.norm();
}

Eigen::Index numerical_rank(const Vector& singular_values, double rel_tol) {
  if (singular_values.size() == 0) return 0;
  const double top = singular_values.maxCoeff();
  if (top <= 0) return 0;
  return (singular_values.array() > rel_tol * top).count();
}

Eigen::Index numerical_rank(const Matrix& m, double rel_tol) {
  return numerical_rank(svd(m).s, rel_tol);
}

Matrix svt(const Matrix& m, double tau) {
  if (!(tau >= 0) || !std::isfinite(tau)) {
    throw std::invalid_argument("svt: threshold must be a finite nonnegative number");
  }
  const SvdFactors f = svd(m);
  const Vector shrunk = (f.s.array() - tau).max(0.0).matrix();
  Eigen::Index keep = (shrunk.array() > 0.0).count();
  if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
  return f.U.leftCols(keep) * shrunk.head(keep).asDiagonal() * f.V.leftCols(keep).transpose();
}

SubspacePair top_subspaces(const Matrix& m, Eigen::Index r) {
  if (r < 1 || r > std::min(m.rows(), m.cols())) {
    throw std::invalid_argument("top_subspaces: rank out of range");
  }
  const SvdFactors f = svd(m);
  return {f.U.leftCols(r), f.V.leftCols(r)};
}

Matrix orthonormal_basis(const Matrix& m) {
  require_finite(m, "orthonormal_basis");
  const Eigen::Index rows = m.rows(), cols = m.cols();
  if (cols > rows) throw std::invalid_argument("orthonormal_basis: more columns than rows");
  Eigen::HouseholderQR<Matrix> qr(m);
  Matrix q = qr.householderQ() * Matrix::Identity(rows, cols);
  const Matrix& r = qr.matrixQR();
  for (Eigen::Index j = 0; j < cols; ++j) {
    if (r(j, j) < 0) q.col(j) *= -1.0;
  }
  return q;
}

double orthonormality_error(const Matrix& q) {
  if (q.cols() == 0) return 0.0;
  return (q.transpose() * q - Matrix::Identity(q.cols(), q.cols())).cwiseAbs().maxCoeff();
}

double composed_operator_norm(const LinearMatrixOperator& op, int iters, std::uint64_t seed) {
  if (iters < 1) throw std::invalid_argument("composed_operator_norm: iters must be >= 1");
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Matrix x(op.rows(), op.cols());
  for (Eigen::Index j = 0; j < x.cols(); ++j)
    for (Eigen::Index i = 0; i < x.rows(); ++i) x(i, j) = gauss(rng);
  x /= x.norm();

  const double scale = 1.0 / static_cast<double>(op.num_observations());
  double estimate = 0.0;
  for (int it = 0; it < iters; ++it) {
    const Matrix ax = op.normal(x) * scale;
    // Rayleigh quotient of a PSD map is nondecreasing along power iterates.
    estimate = std::max(estimate, (x.array() * ax.array()).sum());
    const double len = ax.norm();
    if (len == 0.0) break;
    x = ax / len;
  }
  return estimate;
}

}  // namespace lowrank
