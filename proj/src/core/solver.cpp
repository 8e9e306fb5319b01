#include "lowrank/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace lowrank {

void SolverConfig::validate() const {
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("solver: lambda must be a finite value >= 0");
  if (max_iters < 1) throw std::invalid_argument("solver: max_iters must be >= 1");
  if (!(rel_tol > 0)) throw std::invalid_argument("solver: rel_tol must be > 0");
  if (step && !(*step > 0 && std::isfinite(*step))) throw std::invalid_argument("solver: fixed step must be > 0");
  if (power_iters < 1) throw std::invalid_argument("solver: power_iters must be >= 1");
}

namespace {

double trace_dot(const Matrix& a, const Matrix& b) { return (a.array() * b.array()).sum(); }

// Quantities of an iterate from which f and ∇f follow: 𝔛*𝔛Θ when the operator
// has a cheap normal map, otherwise the residual 𝔛Θ − y. Both are affine in Θ,
// so the extrapolated point's state is the same combination of iterate states.
struct SmoothState {
  Matrix normal;
  Vector residual;
};

class SmoothPart {
 public:
  SmoothPart(const LinearMatrixOperator& op, const Vector& y)
      : op_(op),
        y_(y),
        use_normal_(op.cheap_normal()),
        inv_n_(1.0 / static_cast<double>(op.num_observations())),
        yy_(y.squaredNorm()) {
    if (use_normal_) back_projected_ = op.adjoint(y);
  }

  SmoothState eval(const Matrix& x) const {
    SmoothState s;
    if (use_normal_) {
      s.normal = op_.normal(x);
    } else {
      s.residual = op_.apply(x) - y_;
    }
    return s;
  }

  double value(const Matrix& x, const SmoothState& s) const {
    if (use_normal_) {
      const double sq = yy_ - 2.0 * trace_dot(x, back_projected_) + trace_dot(x, s.normal);
      return 0.5 * inv_n_ * std::max(sq, 0.0);
    }
    return 0.5 * inv_n_ * s.residual.squaredNorm();
  }

  Matrix gradient(const SmoothState& s) const {
    if (use_normal_) return (s.normal - back_projected_) * inv_n_;
    return op_.adjoint(s.residual) * inv_n_;
  }

  SmoothState extrapolate(const SmoothState& cur, const SmoothState& prev, double beta) const {
    SmoothState s;
    if (use_normal_) {
      s.normal = cur.normal + beta * (cur.normal - prev.normal);
    } else {
      s.residual = cur.residual + beta * (cur.residual - prev.residual);
    }
    return s;
  }

 private:
  const LinearMatrixOperator& op_;
  const Vector& y_;
  bool use_normal_;
  double inv_n_;
  double yy_;
  Matrix back_projected_;
};

// svt that also reports the nuclear norm of its output.
Matrix shrink(const Matrix& m, double tau, double& nuclear) {
  const SvdFactors f = svd(m);
  const Vector shrunk = (f.s.array() - tau).max(0.0).matrix();
  const Eigen::Index keep = (shrunk.array() > 0.0).count();
  nuclear = shrunk.sum();
  if (keep == 0) return Matrix::Zero(m.rows(), m.cols());
  return f.U.leftCols(keep) * shrunk.head(keep).asDiagonal() * f.V.leftCols(keep).transpose();
}

void check_problem(const LinearMatrixOperator& op, const Vector& y) {
  if (y.size() != op.num_observations()) throw std::invalid_argument("solver: y length does not match operator N");
  if (!y.allFinite()) throw std::invalid_argument("solver: y contains NaN or Inf");
}

}  // namespace

double objective(const LinearMatrixOperator& op, const Vector& y, const Matrix& theta, double lambda) {
  check_problem(op, y);
  const double n = static_cast<double>(op.num_observations());
  return 0.5 / n * (y - op.apply(theta)).squaredNorm() + lambda * nuclear_norm(theta);
}

Matrix smooth_gradient(const LinearMatrixOperator& op, const Vector& y, const Matrix& theta) {
  check_problem(op, y);
  return op.adjoint(op.apply(theta) - y) / static_cast<double>(op.num_observations());
}

void certify(const LinearMatrixOperator& op, const Vector& y, SolveResult& result) {
  const SmoothPart smooth(op, y);
  const Matrix& theta = result.theta_hat;
  const SmoothState state = smooth.eval(theta);
  const Matrix grad = smooth.gradient(state);
  const double lambda = result.lambda;

  result.optimality_residual = std::max(operator_norm(grad) - lambda, 0.0);

  result.alignment_residual = 0.0;
  const SvdFactors f = svd(theta);
  const Eigen::Index support = numerical_rank(f.s);
  if (support > 0) {
    const Matrix u = f.U.leftCols(support), v = f.V.leftCols(support);
    const double left = operator_norm(u.transpose() * grad + lambda * v.transpose());
    const double right = operator_norm(grad * v + lambda * u);
    result.alignment_residual = std::max(left, right);
  }

  const double y_norm = y.norm();
  const double fit = std::sqrt(2.0 * static_cast<double>(op.num_observations()) * smooth.value(theta, state));
  result.data_residual = y_norm > 0 ? fit / y_norm : fit;
}

namespace {
// Gradient-mapping norm, relative to λ, required before the objective test may stop the loop.
constexpr double kMappingTol = 1e-4;
}  // namespace

SolveResult solve(const LinearMatrixOperator& op, const Vector& y, const SolverConfig& cfg, const Matrix* warm_start) {
  cfg.validate();
  check_problem(op, y);
  const double lambda = cfg.lambda;

  double step = 0.0;
  if (cfg.step) {
    step = *cfg.step;
  } else {
    const double lip = composed_operator_norm(op, cfg.power_iters, cfg.power_seed);
    step = lip > 0 ? 0.99 / lip : 1.0;
  }

  const SmoothPart smooth(op, y);
  Matrix x = Matrix::Zero(op.rows(), op.cols());
  double x_nuclear = 0.0;
  if (warm_start) {
    if (warm_start->rows() != op.rows() || warm_start->cols() != op.cols()) {
      throw std::invalid_argument("solver: warm start shape does not match operator");
    }
    require_finite(*warm_start, "solver warm start");
    x = *warm_start;
    x_nuclear = nuclear_norm(x);
  }
  SmoothState sx = smooth.eval(x);
  double fx = smooth.value(x, sx) + lambda * x_nuclear;

  SolveResult result;
  result.lambda = lambda;
  result.step = step;
  result.objective_trace.push_back(fx);

  Matrix x_prev = x;
  SmoothState s_prev = sx;
  double t = 1.0;

  for (int it = 1; it <= cfg.max_iters; ++it) {
    const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
    const double beta = cfg.acceleration ? (t - 1.0) / t_next : 0.0;

    auto prox_step = [&](const Matrix& point, const SmoothState& state, double& nuclear) {
      return shrink(point - step * smooth.gradient(state), step * lambda, nuclear);
    };

    double z_nuclear = 0.0;
    Matrix z;
    if (beta > 0.0) {
      const Matrix point = x + beta * (x - x_prev);
      z = prox_step(point, smooth.extrapolate(sx, s_prev, beta), z_nuclear);
    } else {
      z = prox_step(x, sx, z_nuclear);
    }
    SmoothState sz = smooth.eval(z);
    double fz = smooth.value(z, sz) + lambda * z_nuclear;

    if (beta > 0.0 && fz > fx) {
      // Momentum overshot: restart from the current iterate.
      t = 1.0;
      z = prox_step(x, sx, z_nuclear);
      sz = smooth.eval(z);
      fz = smooth.value(z, sz) + lambda * z_nuclear;
    } else {
      t = t_next;
    }
    if (!std::isfinite(fz)) {
      throw NumericError("solver: objective became non-finite; the step size is too large, use a smaller step");
    }

    const double change = std::abs(fx - fz);
    const double scale = std::max(std::abs(fx), std::numeric_limits<double>::min());
    const double mapping = (z - x).norm() / step;
    x_prev = std::move(x);
    s_prev = std::move(sx);
    x = std::move(z);
    sx = std::move(sz);
    fx = fz;
    result.objective_trace.push_back(fx);
    result.iterations = it;
    if (change <= cfg.rel_tol * scale && (lambda == 0.0 || mapping <= kMappingTol * lambda)) {
      result.converged = true;
      break;
    }
  }

  result.theta_hat = std::move(x);
  certify(op, y, result);
  return result;
}

SolveResult solve(const ObservationSet& obs, const SolverConfig& cfg, const Matrix* warm_start) {
  validate(obs);
  return solve(*obs.op, obs.y, cfg, warm_start);
}

SolveResult solve_noiseless(const ObservationSet& obs, const ContinuationSchedule& schedule, const SolverConfig& cfg) {
  validate(obs);
  if (obs.noise_level != 0.0) throw std::invalid_argument("solve_noiseless: observation set must be noiseless");
  if (!(schedule.decay > 0 && schedule.decay < 1)) throw std::invalid_argument("solve_noiseless: decay must lie in (0, 1)");
  if (schedule.stages < 1) throw std::invalid_argument("solve_noiseless: stages must be >= 1");

  const LinearMatrixOperator& op = *obs.op;
  double lambda = schedule.lambda0 ? *schedule.lambda0
                                   : 0.5 * operator_norm(op.adjoint(obs.y)) / static_cast<double>(op.num_observations());
  if (!(lambda >= 0) || !std::isfinite(lambda)) throw std::invalid_argument("solve_noiseless: lambda0 must be >= 0");

  SolverConfig stage_cfg = cfg;
  SolveResult total;
  Matrix warm = Matrix::Zero(op.rows(), op.cols());
  for (int stage = 0; stage < schedule.stages; ++stage) {
    stage_cfg.lambda = lambda;
    SolveResult r = solve(op, obs.y, stage_cfg, &warm);
    total.objective_trace.insert(total.objective_trace.end(), r.objective_trace.begin(), r.objective_trace.end());
    total.iterations += r.iterations;
    total.converged = r.converged;
    total.step = r.step;
    total.lambda = r.lambda;
    total.optimality_residual = r.optimality_residual;
    total.alignment_residual = r.alignment_residual;
    total.data_residual = r.data_residual;
    warm = r.theta_hat;
    total.theta_hat = std::move(r.theta_hat);
    lambda *= schedule.decay;
  }
  return total;
}

}  // namespace lowrank
