#include "lowrank/analysis.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lowrank/observation_io.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/random.hpp"
#include "lowrank/regsel.hpp"

namespace lowrank {

namespace {

void check_subspaces(const Matrix& m, const SubspacePair& s) {
  if (s.U.rows() != m.rows() || s.V.rows() != m.cols() || s.U.cols() != s.V.cols()) {
    throw std::invalid_argument("decomposition: subspace dimensions do not match the matrix");
  }
}

Matrix complement_projector(const Matrix& basis) {
  return Matrix::Identity(basis.rows(), basis.rows()) - basis * basis.transpose();
}

Vector symmetric_eigenvalues(const Matrix& m) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(m, Eigen::EigenvaluesOnly);
  if (eig.info() != Eigen::Success) throw NumericError("eigensolver failed");
  return eig.eigenvalues();
}

// PSD square root tolerant of zero eigenvalues.
Matrix psd_sqrt(const Matrix& q) {
  require_finite(q, "psd_sqrt");
  if (q.rows() != q.cols()) throw std::invalid_argument("covariance must be square");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (q + q.transpose()));
  if (eig.info() != Eigen::Success) throw NumericError("eigensolver failed");
  const double top = std::max(eig.eigenvalues().cwiseAbs().maxCoeff(), 1.0);
  if (eig.eigenvalues().minCoeff() < -1e-10 * top) throw std::invalid_argument("covariance must be positive semidefinite");
  return eig.eigenvectors() * eig.eigenvalues().cwiseMax(0.0).cwiseSqrt().asDiagonal() *
         eig.eigenvectors().transpose();
}

void finish(RscReport& report) {
  report.trials = static_cast<int>(report.rows.size());
  report.passes = 0;
  for (const auto& row : report.rows) report.passes += row.back() != 0.0 ? 1 : 0;
  report.pass_rate = report.trials ? static_cast<double>(report.passes) / report.trials : 0.0;
}

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

}  // namespace

ErrorDecomposition decompose_error(const Matrix& delta, const SubspacePair& subspaces) {
  check_subspaces(delta, subspaces);
  ErrorDecomposition d;
  d.r = subspaces.rank();
  d.delta_dblprime = project_model_perp(delta, subspaces);
  d.delta_prime = delta - d.delta_dblprime;
  return d;
}

Matrix project_model(const Matrix& theta, const SubspacePair& subspaces) {
  check_subspaces(theta, subspaces);
  return subspaces.U * (subspaces.U.transpose() * theta * subspaces.V) * subspaces.V.transpose();
}

Matrix project_model_perp(const Matrix& theta, const SubspacePair& subspaces) {
  check_subspaces(theta, subspaces);
  return complement_projector(subspaces.U) * theta * complement_projector(subspaces.V);
}

RestrictedSetMembership in_restricted_set(const Matrix& delta, const RestrictedSetParams& params,
                                          const Matrix& theta_star) {
  if (theta_star.rows() != delta.rows() || theta_star.cols() != delta.cols()) {
    throw std::invalid_argument("restricted set: shapes of error and ground truth differ");
  }
  if (params.subspaces.rank() != params.r) throw std::invalid_argument("restricted set: subspace rank differs from r");
  const ErrorDecomposition d = decompose_error(delta, params.subspaces);
  const double approx = nuclear_norm(project_model_perp(theta_star, params.subspaces));
  RestrictedSetMembership m;
  m.frobenius_margin = delta.norm() - params.delta;
  m.cone_margin = 3.0 * nuclear_norm(d.delta_prime) + 4.0 * approx - nuclear_norm(d.delta_dblprime);
  m.member = m.frobenius_margin >= 0.0 && m.cone_margin >= 0.0;
  return m;
}

double theorem1_bound(double lambda, double r, double kappa, double approx_term, double delta) {
  if (!(kappa > 0)) throw std::invalid_argument("theorem1_bound: kappa must be > 0");
  if (!(lambda >= 0) || !(r >= 0) || !(approx_term >= 0) || !(delta >= 0)) {
    throw std::invalid_argument("theorem1_bound: arguments must be nonnegative");
  }
  const double estimation = 32.0 * lambda * std::sqrt(r) / kappa;
  const double approximation = std::sqrt(16.0 * lambda * approx_term / kappa);
  return std::max({delta, estimation, approximation});
}

double corollary2_bound(double lambda, double kappa, double q, double radius, double delta) {
  if (!(q >= 0 && q <= 1)) throw std::invalid_argument("corollary2_bound: q must lie in [0, 1]");
  if (!(kappa > 0 && kappa <= 1)) throw std::invalid_argument("corollary2_bound: kappa must lie in (0, 1]");
  if (!(lambda >= 0) || !(radius >= 0) || !(delta >= 0)) {
    throw std::invalid_argument("corollary2_bound: arguments must be nonnegative");
  }
  return std::max(delta, 32.0 * std::sqrt(radius) * std::pow(lambda / kappa, 1.0 - q / 2.0));
}

double kappa_value(KappaRule rule, const ObservationSet& obs) {
  switch (rule) {
    case KappaRule::MultivarSigmaMin20: {
      const auto* m = std::get_if<MultivarModel>(&obs.model_params);
      if (!m || m->sigma_x.size() == 0) throw std::invalid_argument("kappa: regression covariance unavailable");
      return symmetric_eigenvalues(m->sigma_x).minCoeff() / 20.0;
    }
    case KappaRule::VarSigmaMin4: {
      const auto* v = std::get_if<VarParams>(&obs.model_params);
      if (!v || v->sigma.size() == 0) throw std::invalid_argument("kappa: VAR stationary covariance unavailable");
      return symmetric_eigenvalues(v->sigma).minCoeff() / 4.0;
    }
    case KappaRule::CompressedEighth:
      return 0.125;
  }
  throw std::invalid_argument("kappa: unknown rule");
}

KappaRule default_kappa_rule(ModelKind kind) {
  switch (kind) {
    case ModelKind::Multivar: return KappaRule::MultivarSigmaMin20;
    case ModelKind::Var: return KappaRule::VarSigmaMin4;
    default: return KappaRule::CompressedEighth;
  }
}

double compressed_tolerance(double radius, double q, Eigen::Index k, Eigen::Index p, Eigen::Index n_obs) {
  const double n = static_cast<double>(n_obs);
  const double rate = std::sqrt(static_cast<double>(k) / n) + std::sqrt(static_cast<double>(p) / n);
  return radius * std::pow(rate, 2.0 - q);
}

BoundComparison empirical_vs_bound(const ObservationSet& obs, const Matrix& theta_hat, double solver_weight,
                                   Eigen::Index r, KappaRule rule, double delta) {
  validate(obs);
  const Matrix& truth = obs.theta_star;
  if (truth.size() == 0) throw std::invalid_argument("empirical_vs_bound: observation set has no ground truth");
  if (theta_hat.rows() != truth.rows() || theta_hat.cols() != truth.cols()) {
    throw std::invalid_argument("empirical_vs_bound: estimate shape differs from ground truth");
  }
  BoundComparison c;
  c.kappa = kappa_value(rule, obs);
  c.lambda = solver_weight * observations_per_sample(*obs.op);
  double approx = 0.0;
  if (r < std::min(truth.rows(), truth.cols()) && truth.norm() > 0) {
    approx = nuclear_norm(project_model_perp(truth, top_subspaces(truth, r)));
  }
  c.frob_error = (theta_hat - truth).norm();
  c.bound = theorem1_bound(c.lambda, static_cast<double>(r), c.kappa, approx, delta);
  c.ratio = c.bound > 0 ? c.frob_error / c.bound : (c.frob_error == 0 ? 0.0 : INFINITY);
  return c;
}

// ---------------------------------------------------------------------------

std::string to_string(CheckKind kind) {
  switch (kind) {
    case CheckKind::MultivarLemma2: return "wishart";
    case CheckKind::VarLemma4: return "var";
    case CheckKind::CompressedProp1: return "prop1";
    case CheckKind::MetaLemma8: return "meta";
  }
  return "unknown";
}

double RscReport::floor_standard_error() const {
  if (trials <= 0) return 0.0;
  const double f = std::clamp(theoretical_floor, 0.0, 1.0);
  return std::sqrt(f * (1.0 - f) / trials);
}

bool RscReport::meets_floor() const { return pass_rate >= theoretical_floor - 3.0 * floor_standard_error(); }

RscReport check_wishart_spectrum(Eigen::Index p, Eigen::Index n, const Matrix& sigma, int trials,
                                 std::uint64_t seed, unsigned workers) {
  if (p < 1) throw std::invalid_argument("wishart check: p must be positive");
  if (n < p) throw std::invalid_argument("wishart check: need n >= p");
  if (trials < 1) throw std::invalid_argument("wishart check: trials must be positive");
  if (sigma.rows() != p || sigma.cols() != p) throw std::invalid_argument("wishart check: covariance must be p×p");
  const Matrix root = symmetric_sqrt(sigma);
  const Vector pop = symmetric_eigenvalues(sigma);
  const double lo = pop.minCoeff() / 9.0, hi = 9.0 * pop.maxCoeff();

  RscReport report;
  report.kind = CheckKind::MultivarLemma2;
  report.theoretical_floor = std::max(0.0, 1.0 - 4.0 * std::exp(-static_cast<double>(n) / 2.0));
  report.columns = {"trial", "sigma_min", "sigma_max", "pass"};
  report.rows.assign(trials, {});
  parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {t}));
    const Matrix x = gaussian_matrix(n, p, rng) * root;
    const Vector ev = symmetric_eigenvalues(x.transpose() * x / static_cast<double>(n));
    const bool pass = ev.minCoeff() >= lo && ev.maxCoeff() <= hi;
    report.rows[t] = {static_cast<double>(t), ev.minCoeff(), ev.maxCoeff(), pass ? 1.0 : 0.0};
  });
  finish(report);
  return report;
}

RscReport check_var_spectrum(const Matrix& theta_star, double nu, Eigen::Index n, int trials, std::uint64_t seed,
                             unsigned workers) {
  if (trials < 1) throw std::invalid_argument("var check: trials must be positive");
  const double gamma = operator_norm(theta_star);
  if (!(gamma < 1.0)) throw std::invalid_argument("var check: unstable system matrix (operator norm >= 1)");
  const VarParams params = make_var_params(theta_star, nu, n, gamma);
  const Vector pop = symmetric_eigenvalues(params.sigma);
  const double hi = 24.0 * pop.maxCoeff() / (1.0 - gamma), lo = pop.minCoeff() / 4.0;

  RscReport report;
  report.kind = CheckKind::VarLemma4;
  report.theoretical_floor = 0.0;
  report.note = "probability bound has unspecified constants; no floor";
  report.columns = {"trial", "sigma_min", "sigma_max", "pass"};
  report.rows.assign(trials, {});
  parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
    const ObservationSet obs = sample_var(params, derive_seed(seed, {t}));
    const auto& design = dynamic_cast<const DesignOperator&>(*obs.op);
    const Vector ev = symmetric_eigenvalues(design.gram() / static_cast<double>(n));
    const bool pass = ev.minCoeff() >= lo && ev.maxCoeff() <= hi;
    report.rows[t] = {static_cast<double>(t), ev.minCoeff(), ev.maxCoeff(), pass ? 1.0 : 0.0};
  });
  finish(report);
  return report;
}

RscReport check_prop1(Eigen::Index k, Eigen::Index p, Eigen::Index n_obs, int trials, int test_matrices,
                      std::uint64_t seed, unsigned workers) {
  if (k < 1 || p < 1 || n_obs < 1) throw std::invalid_argument("prop1 check: dimensions must be positive");
  if (trials < 1 || test_matrices < 1) throw std::invalid_argument("prop1 check: counts must be positive");
  const Eigen::Index m = std::min(k, p);
  const double n = static_cast<double>(n_obs);
  const double rate = std::sqrt(static_cast<double>(k) / n) + std::sqrt(static_cast<double>(p) / n);

  RscReport report;
  report.kind = CheckKind::CompressedProp1;
  report.theoretical_floor = std::max(0.0, 1.0 - 2.0 * std::exp(-n / 32.0));
  report.note = "sampled test matrices; a pass means no violation was found";
  report.columns = {"trial", "min_margin", "min_lhs", "violations", "pass"};
  report.rows.assign(trials, {});
  parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t t) {
    Rng rng(derive_seed(seed, {t}));
    const Matrix observations = gaussian_matrix(n_obs, k * p, rng);
    Matrix tests(k * p, test_matrices);
    Vector rhs(test_matrices);
    std::uniform_int_distribution<Eigen::Index> rank_dist(1, m);
    for (int j = 0; j < test_matrices; ++j) {
      Matrix theta;
      switch (j % 3) {
        case 0: {
          theta = orthonormal_basis(gaussian_matrix(k, 1, rng)) * orthonormal_basis(gaussian_matrix(p, 1, rng)).transpose();
          break;
        }
        case 1: {
          const Eigen::Index r = rank_dist(rng);
          const Vector s = gaussian_vector(r, rng).cwiseAbs();
          theta = orthonormal_basis(gaussian_matrix(k, r, rng)) * s.asDiagonal() *
                  orthonormal_basis(gaussian_matrix(p, r, rng)).transpose();
          break;
        }
        default:
          theta = gaussian_matrix(k, p, rng);
      }
      const double f = theta.norm();
      if (f > 0) theta /= f;
      tests.col(j) = Eigen::Map<const Vector>(theta.data(), theta.size());
      rhs(j) = 0.25 * theta.norm() - rate * nuclear_norm(theta);
    }
    const Vector lhs = (observations * tests).colwise().norm().transpose() / std::sqrt(n);
    const Vector margin = lhs - rhs;
    const double violations = static_cast<double>((margin.array() < 0.0).count());
    report.rows[t] = {static_cast<double>(t), margin.minCoeff(), lhs.minCoeff(), violations,
                      violations == 0 ? 1.0 : 0.0};
  });
  finish(report);
  return report;
}

RscReport check_meta_concentration(const Matrix& q, double t, int trials, std::uint64_t seed, unsigned workers) {
  const Eigen::Index n = q.rows();
  if (n < 1 || q.cols() != n) throw std::invalid_argument("meta check: Q must be square and nonempty");
  if (trials < 1) throw std::invalid_argument("meta check: trials must be positive");
  const double sn = std::sqrt(static_cast<double>(n));
  if (!(t > 2.0 / sn)) throw std::invalid_argument("meta check: need t > 2/sqrt(n)");
  const Matrix root = psd_sqrt(q);
  const bool identity = q.isIdentity(0.0);
  const double trace = q.trace();
  const double qnorm = n > 0 ? std::max(symmetric_eigenvalues(q).maxCoeff(), 0.0) : 0.0;
  const double limit = 4.0 * t * qnorm;
  const double dn = static_cast<double>(n);

  RscReport report;
  report.kind = CheckKind::MetaLemma8;
  report.theoretical_floor = std::max(
      0.0, 1.0 - 2.0 * std::exp(-dn * (t - 2.0 / sn) * (t - 2.0 / sn) / 2.0) - 2.0 * std::exp(-dn / 2.0));
  report.columns = {"trial", "deviation", "norm_sq_over_n", "pass"};
  report.rows.assign(trials, {});
  parallel_for(static_cast<std::size_t>(trials), workers, [&](std::size_t i) {
    Rng rng(derive_seed(seed, {i}));
    const Vector g = gaussian_vector(n, rng);
    const double sq = identity ? g.squaredNorm() : (root * g).squaredNorm();
    const double deviation = std::abs(sq - trace) / dn;
    report.rows[i] = {static_cast<double>(i), deviation, sq / dn, deviation <= limit ? 1.0 : 0.0};
  });
  finish(report);
  return report;
}

void write_report_csv(const RscReport& report, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  for (std::size_t c = 0; c < report.columns.size(); ++c) out << (c ? "," : "") << report.columns[c];
  out << '\n';
  for (const auto& row : report.rows) {
    for (std::size_t c = 0; c < row.size(); ++c) out << (c ? "," : "") << format_double(row[c]);
    out << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::string summary_text(const RscReport& report) {
  std::ostringstream s;
  s << "check: " << to_string(report.kind) << '\n'
    << "trials: " << report.trials << '\n'
    << "passes: " << report.passes << '\n'
    << "pass_rate: " << format_double(report.pass_rate) << '\n'
    << "theoretical_floor: " << format_double(report.theoretical_floor) << '\n'
    << "floor_minus_3se: " << format_double(report.theoretical_floor - 3.0 * report.floor_standard_error()) << '\n'
    << "meets_floor: " << (report.meets_floor() ? "yes" : "no") << '\n';
  if (!report.note.empty()) s << "note: " << report.note << '\n';
  return s.str();
}

}  // namespace lowrank
