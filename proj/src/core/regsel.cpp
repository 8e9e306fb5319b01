#include "lowrank/regsel.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "lowrank/random.hpp"

namespace lowrank {

std::string to_string(LambdaRule rule) {
  switch (rule) {
    case LambdaRule::MultivarCor3: return "multivar";
    case LambdaRule::VarCor4: return "var";
    case LambdaRule::CompressedLemma6: return "compressed";
    case LambdaRule::GenericAdjoint: return "generic";
    case LambdaRule::Manual: return "manual";
  }
  return "unknown";
}

LambdaRule lambda_rule_from_string(const std::string& name) {
  if (name == "multivar" || name == "regression") return LambdaRule::MultivarCor3;
  if (name == "var") return LambdaRule::VarCor4;
  if (name == "compressed") return LambdaRule::CompressedLemma6;
  if (name == "generic") return LambdaRule::GenericAdjoint;
  if (name == "manual") return LambdaRule::Manual;
  throw std::invalid_argument("unknown lambda rule '" + name + "'");
}

namespace {

void require_positive(double v, const char* what) {
  if (!(v > 0) || !std::isfinite(v)) throw std::invalid_argument(std::string("lambda rule: ") + what + " must be > 0");
}

}  // namespace

LambdaChoice lambda_multivar(double nu, double sigma_max, Eigen::Index k, Eigen::Index p, Eigen::Index n) {
  require_positive(nu, "nu");
  require_positive(sigma_max, "sigma_max");
  require_positive(static_cast<double>(k), "k");
  require_positive(static_cast<double>(p), "p");
  require_positive(static_cast<double>(n), "n");
  LambdaChoice c;
  c.rule = LambdaRule::MultivarCor3;
  c.value = 10.0 * nu * std::sqrt(sigma_max) * std::sqrt(static_cast<double>(k + p) / static_cast<double>(n));
  c.solver_weight = c.value / static_cast<double>(k);
  c.inputs = {{"nu", nu}, {"sigma_max", sigma_max}, {"k", double(k)}, {"p", double(p)}, {"n", double(n)}};
  return c;
}

LambdaChoice lambda_var(double sigma_opnorm, double gamma, Eigen::Index p, Eigen::Index n) {
  require_positive(sigma_opnorm, "sigma operator norm");
  if (!(gamma >= 0 && gamma < 1)) throw std::invalid_argument("lambda rule: gamma must lie in [0, 1)");
  require_positive(static_cast<double>(p), "p");
  require_positive(static_cast<double>(n), "n");
  LambdaChoice c;
  c.rule = LambdaRule::VarCor4;
  c.value = 80.0 * sigma_opnorm / (1.0 - gamma) * std::sqrt(static_cast<double>(p) / static_cast<double>(n));
  c.solver_weight = c.value / static_cast<double>(p);
  c.inputs = {{"sigma_opnorm", sigma_opnorm}, {"gamma", gamma}, {"p", double(p)}, {"n", double(n)}};
  return c;
}

LambdaChoice lambda_compressed(double nu, Eigen::Index k, Eigen::Index p, Eigen::Index n_obs) {
  require_positive(nu, "nu");
  require_positive(static_cast<double>(k), "k");
  require_positive(static_cast<double>(p), "p");
  require_positive(static_cast<double>(n_obs), "N");
  const double n = static_cast<double>(n_obs);
  LambdaChoice c;
  c.rule = LambdaRule::CompressedLemma6;
  c.value = 8.0 * nu * (std::sqrt(static_cast<double>(k) / n) + std::sqrt(static_cast<double>(p) / n));
  c.solver_weight = c.value;
  c.inputs = {{"nu", nu}, {"k", double(k)}, {"p", double(p)}, {"N", n}};
  return c;
}

LambdaChoice lambda_generic(const ObservationSet& obs, int draws, std::uint64_t seed, double floor) {
  validate(obs);
  if (draws < 10) throw std::invalid_argument("lambda_generic: need at least 10 noise draws");
  require_positive(floor, "floor");
  LambdaChoice c;
  c.rule = LambdaRule::GenericAdjoint;
  c.inputs = {{"nu", obs.noise_level}, {"draws", double(draws)}, {"seed", double(seed)}};
  if (obs.noise_level == 0.0) {
    c.value = c.solver_weight = floor;
    return c;
  }
  const LinearMatrixOperator& op = *obs.op;
  const double inv_n = 1.0 / static_cast<double>(op.num_observations());
  Rng rng(seed);
  std::vector<double> levels(draws);
  for (int d = 0; d < draws; ++d) {
    levels[d] = operator_norm(op.adjoint_of_gaussian_noise(obs.noise_level, rng)) * inv_n;
  }
  std::sort(levels.begin(), levels.end());
  // Linear interpolation between order statistics.
  const double pos = 0.95 * static_cast<double>(draws - 1);
  const auto lo = static_cast<std::size_t>(std::floor(pos));
  const std::size_t hi = std::min(lo + 1, levels.size() - 1);
  const double q95 = levels[lo] + (pos - static_cast<double>(lo)) * (levels[hi] - levels[lo]);
  c.value = c.solver_weight = std::max(2.0 * q95, floor);
  return c;
}

LambdaChoice lambda_manual(double value) {
  if (!(value >= 0) || !std::isfinite(value)) throw std::invalid_argument("lambda: manual value must be >= 0");
  LambdaChoice c;
  c.rule = LambdaRule::Manual;
  c.value = c.solver_weight = value;
  c.inputs = {{"value", value}};
  return c;
}

double observations_per_sample(const LinearMatrixOperator& op) {
  switch (op.kind()) {
    case ModelKind::Multivar: return static_cast<double>(op.rows());
    case ModelKind::Var: return static_cast<double>(op.cols());
    default: return 1.0;
  }
}

double noise_adjoint_level(const ObservationSet& obs) {
  validate(obs);
  if (obs.noise.size() != obs.num_observations()) {
    throw std::invalid_argument("noise_adjoint_level: observation set carries no realized noise");
  }
  return 2.0 * operator_norm(obs.op->adjoint(obs.noise)) / static_cast<double>(obs.num_observations());
}

}  // namespace lowrank
