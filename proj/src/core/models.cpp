#include "lowrank/models.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "lowrank/random.hpp"

namespace lowrank {

namespace {

// Kronecker-system size limit for the direct Lyapunov solve; p² unknowns.
constexpr Eigen::Index kDirectLyapunovMaxDim = 20;

SubspacePair random_subspaces(Eigen::Index k, Eigen::Index p, Eigen::Index r, Rng& rng) {
  Matrix gu = gaussian_matrix(k, r, rng);
  Matrix gv = gaussian_matrix(p, r, rng);
  return {orthonormal_basis(gu), orthonormal_basis(gv)};
}

}  // namespace

GroundTruth generate_exact_lowrank(Eigen::Index k, Eigen::Index p, Eigen::Index r, double scale,
                                   std::uint64_t seed) {
  if (k < 1 || p < 1) throw std::invalid_argument("generate_exact_lowrank: dimensions must be positive");
  if (r < 1 || r > std::min(k, p)) throw std::invalid_argument("generate_exact_lowrank: rank out of range");
  if (!(scale > 0) || !std::isfinite(scale)) throw std::invalid_argument("generate_exact_lowrank: scale must be positive");
  Rng rng(seed);
  SubspacePair f = random_subspaces(k, p, r, rng);
  Matrix theta = scale * f.U * f.V.transpose();
  return {std::move(theta), ExactRank{r}, std::move(f)};
}

GroundTruth generate_near_lowrank(Eigen::Index k, Eigen::Index p, double q, double radius, std::uint64_t seed) {
  if (k < 1 || p < 1) throw std::invalid_argument("generate_near_lowrank: dimensions must be positive");
  if (q == 0.0) {
    throw std::invalid_argument("generate_near_lowrank: q = 0 is exact rank; use generate_exact_lowrank");
  }
  if (!(q > 0 && q <= 1)) throw std::invalid_argument("generate_near_lowrank: q must lie in (0, 1]");
  if (!(radius > 0) || !std::isfinite(radius)) throw std::invalid_argument("generate_near_lowrank: R_q must be positive");

  const Eigen::Index m = std::min(k, p);
  double harmonic = 0.0;
  for (Eigen::Index i = 1; i <= m; ++i) harmonic += 1.0 / static_cast<double>(i);
  const double c = std::pow(radius / harmonic, 1.0 / q);
  Vector s(m);
  for (Eigen::Index i = 0; i < m; ++i) s(i) = c * std::pow(static_cast<double>(i + 1), -1.0 / q);

  Rng rng(seed);
  SubspacePair f = random_subspaces(k, p, m, rng);
  Matrix theta = f.U * s.asDiagonal() * f.V.transpose();
  return {std::move(theta), NearLowRank{q, radius}, std::move(f)};
}

double lq_radius(const Matrix& theta, double q) {
  const Vector s = svd(theta).s;
  if (q == 0.0) return static_cast<double>(numerical_rank(s));
  return s.array().pow(q).sum();
}

void validate(const ObservationSet& obs) {
  if (!obs.op) throw std::invalid_argument("observation set: missing operator");
  if (obs.y.size() != obs.op->num_observations()) {
    throw std::invalid_argument("observation set: y length does not match operator N");
  }
  if (!obs.y.allFinite()) throw std::invalid_argument("observation set: y contains NaN or Inf");
  if (!(obs.noise_level >= 0)) throw std::invalid_argument("observation set: noise level must be nonnegative");
  if (obs.theta_star.size() != 0 &&
      (obs.theta_star.rows() != obs.op->rows() || obs.theta_star.cols() != obs.op->cols())) {
    throw std::invalid_argument("observation set: ground truth shape does not match operator");
  }
}

std::shared_ptr<const IdentityOperator> identity_operator(Eigen::Index k, Eigen::Index p) {
  return std::make_shared<IdentityOperator>(k, p);
}

std::shared_ptr<const DesignOperator> multivar_operator(const Matrix& design, Eigen::Index k) {
  return std::make_shared<DesignOperator>(design, k, ModelKind::Multivar);
}

ObservationSet observe(OperatorPtr op, const Matrix& theta, double nu, std::uint64_t seed) {
  if (!(nu >= 0)) throw std::invalid_argument("observe: noise level must be nonnegative");
  Rng rng(seed);
  ObservationSet obs;
  obs.noise = nu > 0 ? gaussian_vector(op->num_observations(), rng, nu) : Vector::Zero(op->num_observations());
  obs.y = op->apply(theta) + obs.noise;
  obs.op = std::move(op);
  obs.noise_level = nu;
  obs.seed = seed;
  obs.model_params = obs.op->kind() == ModelKind::Compressed ? ModelParams{CompressedModel{}} : ModelParams{IdentityModel{}};
  obs.theta_star = theta;
  return obs;
}

Matrix symmetric_sqrt(const Matrix& sigma) {
  require_finite(sigma, "symmetric_sqrt");
  if (sigma.rows() != sigma.cols()) throw std::invalid_argument("covariance must be square");
  const double asym = (sigma - sigma.transpose()).cwiseAbs().maxCoeff();
  if (asym > 1e-10 * std::max(1.0, sigma.cwiseAbs().maxCoeff())) {
    throw std::invalid_argument("covariance must be symmetric");
  }
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (sigma + sigma.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("symmetric_sqrt: eigensolver failed");
  const Vector ev = eig.eigenvalues();
  if (!(ev.minCoeff() > 0)) throw std::invalid_argument("covariance must be positive definite");
  return eig.eigenvectors() * ev.cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

ObservationSet sample_multivar(const GroundTruth& truth, Eigen::Index n, const Matrix& sigma_x, double nu,
                               std::uint64_t seed) {
  const Matrix& theta = truth.theta_star;
  const Eigen::Index k = theta.rows(), p = theta.cols();
  if (n < 1) throw std::invalid_argument("sample_multivar: n must be positive");
  if (sigma_x.rows() != p || sigma_x.cols() != p) {
    throw std::invalid_argument("sample_multivar: covariance must be p×p");
  }
  if (!(nu >= 0)) throw std::invalid_argument("sample_multivar: noise level must be nonnegative");
  const Matrix root = symmetric_sqrt(sigma_x);

  Rng rng(seed);
  Matrix design = gaussian_matrix(n, p, rng) * root;  // rows x_a ~ N(0, Σ)
  Matrix w = nu > 0 ? gaussian_matrix(n, k, rng, nu) : Matrix::Zero(n, k);

  auto op = std::make_shared<DesignOperator>(std::move(design), k, ModelKind::Multivar);
  ObservationSet obs;
  obs.noise = Eigen::Map<const Vector>(w.data(), w.size());
  obs.y = op->apply(theta) + obs.noise;
  obs.op = std::move(op);
  obs.noise_level = nu;
  obs.seed = seed;
  obs.model_params = MultivarModel{sigma_x, n};
  obs.theta_star = theta;
  return obs;
}

Matrix solve_lyapunov(const Matrix& theta, double nu) {
  require_finite(theta, "solve_lyapunov");
  if (theta.rows() != theta.cols()) throw std::invalid_argument("solve_lyapunov: system matrix must be square");
  if (!(nu >= 0) || !std::isfinite(nu)) throw std::invalid_argument("solve_lyapunov: noise level must be nonnegative");
  const double norm = operator_norm(theta);
  if (!(norm < 1.0)) {
    throw std::invalid_argument("solve_lyapunov: unstable system, operator norm " + std::to_string(norm) + " >= 1");
  }
  const Eigen::Index p = theta.rows();
  const double v2 = nu * nu;
  Matrix sigma;

  if (p <= kDirectLyapunovMaxDim) {
    // (I − Θ⊗Θ)·vec(Σ) = ν²·vec(I), column-major vec.
    const Eigen::Index d = p * p;
    Matrix system = Matrix::Identity(d, d);
    for (Eigen::Index a = 0; a < p; ++a)
      for (Eigen::Index b = 0; b < p; ++b)
        system.block(a * p, b * p, p, p) -= theta(a, b) * theta;
    Vector rhs = Vector::Zero(d);
    for (Eigen::Index i = 0; i < p; ++i) rhs(i * p + i) = v2;
    const Vector sol = system.partialPivLu().solve(rhs);
    sigma = Eigen::Map<const Matrix>(sol.data(), p, p);
  } else {
    // Doubling form of Σ_{t+1} = ΘΣ_tΘᵀ + ν²I: after j steps Σ holds 2^j terms
    // of Σ Θ^i ν² (Θᵀ)^i.
    sigma = v2 * Matrix::Identity(p, p);
    Matrix power = theta;
    for (int step = 0; step < 64; ++step) {
      sigma += power * sigma * power.transpose();
      power = power * power;
      if (power.cwiseAbs().maxCoeff() < 1e-300 || power.norm() < 1e-17) break;
    }
  }
  sigma = 0.5 * (sigma + sigma.transpose());

  const double residual = (sigma - theta * sigma * theta.transpose() - v2 * Matrix::Identity(p, p)).norm();
  if (!sigma.allFinite() || residual > 1e-10 * std::max(1.0, sigma.norm())) {
    throw NumericError("solve_lyapunov: residual " + std::to_string(residual) + " above tolerance");
  }
  return sigma;
}

VarParams make_var_params(const Matrix& theta_star, double nu, Eigen::Index n, double gamma) {
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("var: gamma must lie in [0, 1)");
  if (n < 1) throw std::invalid_argument("var: path length must be positive");
  const double norm = operator_norm(theta_star);
  if (norm > gamma * (1 + 1e-12) + 1e-15) {
    throw std::invalid_argument("var: operator norm of system matrix exceeds gamma");
  }
  return {theta_star, nu, n, gamma, solve_lyapunov(theta_star, nu)};
}

ObservationSet sample_var(const VarParams& params, std::uint64_t seed) {
  const Matrix& theta = params.theta_star;
  const Eigen::Index p = theta.rows(), n = params.n;
  if (theta.cols() != p) throw std::invalid_argument("sample_var: system matrix must be square");
  if (n < 1) throw std::invalid_argument("sample_var: path length must be positive");
  if (!(params.nu >= 0)) throw std::invalid_argument("sample_var: noise level must be nonnegative");
  if (params.sigma.rows() != p || params.sigma.cols() != p) {
    throw std::invalid_argument("sample_var: stationary covariance missing; use make_var_params");
  }
  const Matrix root = symmetric_sqrt(params.sigma);

  Rng rng(seed);
  Matrix path(n + 1, p);  // row t holds Z_{t+1}
  path.row(0) = (root * gaussian_vector(p, rng)).transpose();
  Matrix w = params.nu > 0 ? gaussian_matrix(n, p, rng, params.nu) : Matrix::Zero(n, p);
  for (Eigen::Index t = 0; t < n; ++t) {
    path.row(t + 1) = path.row(t) * theta.transpose() + w.row(t);
  }

  auto op = std::make_shared<DesignOperator>(path.topRows(n), p, ModelKind::Var);
  const Matrix responses = path.bottomRows(n);
  ObservationSet obs;
  obs.y = Eigen::Map<const Vector>(responses.data(), responses.size());
  obs.noise = Eigen::Map<const Vector>(w.data(), w.size());
  obs.op = std::move(op);
  obs.noise_level = params.nu;
  obs.seed = seed;
  obs.model_params = params;
  obs.theta_star = theta;
  return obs;
}

ObservationSet sample_compressed(const GroundTruth& truth, Eigen::Index n_obs, double nu, std::uint64_t seed,
                                 double budget_bytes) {
  const Matrix& theta = truth.theta_star;
  const Eigen::Index k = theta.rows(), p = theta.cols();
  if (n_obs < 1) throw std::invalid_argument("sample_compressed: N must be positive");
  if (!(nu >= 0)) throw std::invalid_argument("sample_compressed: noise level must be nonnegative");
  const double bytes = static_cast<double>(n_obs) * static_cast<double>(k) * static_cast<double>(p) * sizeof(double);
  if (bytes > budget_bytes) {
    throw std::length_error("sample_compressed: materialized operator needs " + std::to_string(bytes) +
                            " bytes, above the budget of " + std::to_string(budget_bytes) + " bytes");
  }

  Rng rng(seed);
  Matrix rows = gaussian_matrix(n_obs, k * p, rng);
  Vector eps = nu > 0 ? gaussian_vector(n_obs, rng, nu) : Vector::Zero(n_obs);
  auto op = std::make_shared<MaterializedOperator>(std::move(rows), k, p, ModelKind::Compressed);

  ObservationSet obs;
  obs.y = op->apply(theta) + eps;
  obs.noise = std::move(eps);
  obs.op = std::move(op);
  obs.noise_level = nu;
  obs.seed = seed;
  obs.model_params = CompressedModel{};
  obs.theta_star = theta;
  return obs;
}

}  // namespace lowrank
