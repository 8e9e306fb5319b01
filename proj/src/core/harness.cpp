#include "lowrank/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <stdexcept>
#include <tuple>

#include "lowrank/analysis.hpp"
#include "lowrank/models.hpp"
#include "lowrank/observation_io.hpp"
#include "lowrank/parallel.hpp"
#include "lowrank/random.hpp"

namespace lowrank {

LambdaRule default_lambda_rule(ModelKind model) {
  switch (model) {
    case ModelKind::Multivar: return LambdaRule::MultivarCor3;
    case ModelKind::Var: return LambdaRule::GenericAdjoint;
    case ModelKind::Compressed: return LambdaRule::CompressedLemma6;
    default: return LambdaRule::GenericAdjoint;
  }
}

LambdaRule ExperimentConfig::effective_lambda_rule() const {
  return lambda_rule ? *lambda_rule : default_lambda_rule(model);
}

void ExperimentConfig::validate() const {
  if (model != ModelKind::Multivar && model != ModelKind::Var && model != ModelKind::Compressed) {
    throw std::invalid_argument("experiment: model must be regression, var or compressed");
  }
  if (p_list.empty()) throw std::invalid_argument("experiment: p_list is empty");
  for (Eigen::Index p : p_list) {
    if (p < 1) throw std::invalid_argument("experiment: every p must be positive");
    if (r > std::min(p, k_for(p))) throw std::invalid_argument("experiment: r exceeds min(k, p)");
    if (model == ModelKind::Compressed && p > kCompressedDeskMaxP && !allow_large_compressed) {
      throw std::invalid_argument("experiment: compressed sensing with p > " + std::to_string(kCompressedDeskMaxP) +
                                  " requires allow_large_compressed = true");
    }
  }
  if (model == ModelKind::Var && k) throw std::invalid_argument("experiment: VAR matrices are square; do not set k");
  if (k && *k < 1) throw std::invalid_argument("experiment: k must be positive");
  if (r < 1) throw std::invalid_argument("experiment: r must be positive");
  if (!(nu > 0)) throw std::invalid_argument("experiment: nu must be > 0");
  if (model == ModelKind::Var && !(gamma > 0 && gamma < 1)) throw std::invalid_argument("experiment: gamma must lie in (0, 1)");
  if (!(sigma_scale > 0)) throw std::invalid_argument("experiment: sigma_spec scale must be > 0");
  if (!(signal_scale > 0)) throw std::invalid_argument("experiment: signal_scale must be > 0");
  if (rescaled_grid.empty()) throw std::invalid_argument("experiment: rescaled_grid is empty");
  for (std::size_t i = 0; i < rescaled_grid.size(); ++i) {
    if (!(rescaled_grid[i] >= 1)) throw std::invalid_argument("experiment: rescaled_grid values must be >= 1");
    if (i > 0 && !(rescaled_grid[i] > rescaled_grid[i - 1])) {
      throw std::invalid_argument("experiment: rescaled_grid must be strictly increasing");
    }
  }
  if (trials_per_point < 1) throw std::invalid_argument("experiment: trials_per_point must be >= 1");
  if (generic_draws < 10) throw std::invalid_argument("experiment: generic_draws must be >= 10");
  const LambdaRule rule = effective_lambda_rule();
  if ((rule == LambdaRule::MultivarCor3 && model != ModelKind::Multivar) ||
      (rule == LambdaRule::VarCor4 && model != ModelKind::Var) ||
      (rule == LambdaRule::CompressedLemma6 && model != ModelKind::Compressed)) {
    throw std::invalid_argument("experiment: lambda rule " + to_string(rule) + " does not apply to model " +
                                to_string(model));
  }
  if (rule == LambdaRule::Manual && !(manual_lambda >= 0)) throw std::invalid_argument("experiment: manual lambda must be >= 0");
  solver.validate();
}

std::uint64_t trial_seed(std::uint64_t master_seed, Eigen::Index p, int grid_index, int trial) {
  return derive_seed(master_seed, {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(grid_index),
                                   static_cast<std::uint64_t>(trial)});
}

TrialRecord run_trial(const ExperimentConfig& cfg, Eigen::Index p, int grid_index, int trial) {
  TrialRecord rec;
  rec.model = to_string(cfg.model);
  rec.p = p;
  rec.k = cfg.k_for(p);
  rec.r = cfg.r;
  rec.trial = trial;
  rec.grid_index = grid_index;
  rec.seed = trial_seed(cfg.master_seed, p, grid_index, trial);
  const double t = cfg.rescaled_grid.at(grid_index);
  rec.N = std::max<Eigen::Index>(1, std::llround(t * static_cast<double>(cfg.r * p)));
  rec.rescaled_N = static_cast<double>(rec.N) / static_cast<double>(cfg.r * p);

  const auto start = std::chrono::steady_clock::now();
  try {
    const std::uint64_t truth_seed = derive_seed(rec.seed, {1});
    const std::uint64_t data_seed = derive_seed(rec.seed, {2});
    const std::uint64_t lambda_seed = derive_seed(rec.seed, {3});

    ObservationSet obs;
    switch (cfg.model) {
      case ModelKind::Multivar: {
        const GroundTruth truth = generate_exact_lowrank(rec.k, p, cfg.r, cfg.signal_scale, truth_seed);
        obs = sample_multivar(truth, rec.N, cfg.sigma_scale * Matrix::Identity(p, p), cfg.nu, data_seed);
        break;
      }
      case ModelKind::Var: {
        const GroundTruth truth = generate_exact_lowrank(p, p, cfg.r, cfg.gamma, truth_seed);
        obs = sample_var(make_var_params(truth.theta_star, cfg.nu, rec.N, cfg.gamma), data_seed);
        break;
      }
      case ModelKind::Compressed: {
        const GroundTruth truth = generate_exact_lowrank(rec.k, p, cfg.r, cfg.signal_scale, truth_seed);
        obs = sample_compressed(truth, rec.N, cfg.nu, data_seed, cfg.operator_budget_bytes);
        break;
      }
      default:
        throw std::invalid_argument("unsupported model");
    }

    LambdaChoice choice;
    switch (cfg.effective_lambda_rule()) {
      case LambdaRule::MultivarCor3:
        choice = lambda_multivar(cfg.nu, cfg.sigma_scale, rec.k, p, rec.N);
        break;
      case LambdaRule::VarCor4: {
        const auto& params = std::get<VarParams>(obs.model_params);
        choice = lambda_var(operator_norm(params.sigma), cfg.gamma, p, rec.N);
        break;
      }
      case LambdaRule::CompressedLemma6:
        choice = lambda_compressed(cfg.nu, rec.k, p, rec.N);
        break;
      case LambdaRule::GenericAdjoint:
        choice = lambda_generic(obs, cfg.generic_draws, lambda_seed);
        break;
      case LambdaRule::Manual:
        choice = lambda_manual(cfg.manual_lambda);
        break;
    }
    rec.lambda = choice.solver_weight;

    SolverConfig scfg = cfg.solver;
    scfg.lambda = choice.solver_weight;
    const SolveResult res = solve(obs, scfg);

    const Matrix diff = res.theta_hat - obs.theta_star;
    rec.frob_error = diff.norm();
    const double truth_norm = obs.theta_star.norm();
    rec.relative_error = truth_norm > 0 ? rec.frob_error / truth_norm : rec.frob_error;
    rec.nuclear_error = nuclear_norm(diff);
    rec.iterations = res.iterations;

    const double delta = cfg.model == ModelKind::Compressed
                             ? compressed_tolerance(static_cast<double>(cfg.r), 0.0, rec.k, p, rec.N)
                             : 0.0;
    const BoundComparison cmp =
        empirical_vs_bound(obs, res.theta_hat, choice.solver_weight, cfg.r, default_kappa_rule(cfg.model), delta);
    rec.bound_value = cmp.bound;
    rec.bound_ratio = cmp.ratio;
  } catch (const std::exception& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  rec.runtime_ms =
      std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  return rec;
}

std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const std::size_t per_p = cfg.rescaled_grid.size() * static_cast<std::size_t>(cfg.trials_per_point);
  const std::size_t total = cfg.p_list.size() * per_p;
  std::vector<TrialRecord> records(total);
  parallel_for(total, cfg.workers, [&](std::size_t idx) {
    const std::size_t pi = idx / per_p;
    const std::size_t rest = idx % per_p;
    const int gi = static_cast<int>(rest / cfg.trials_per_point);
    const int trial = static_cast<int>(rest % cfg.trials_per_point);
    records[idx] = run_trial(cfg, cfg.p_list[pi], gi, trial);
  });
  std::stable_sort(records.begin(), records.end(), [](const TrialRecord& a, const TrialRecord& b) {
    return std::tie(a.p, a.grid_index, a.trial) < std::tie(b.p, b.grid_index, b.trial);
  });
  return records;
}

namespace {

bool at_rescaled(const TrialRecord& rec, double t) {
  const double rp = static_cast<double>(rec.r * rec.p);
  return std::abs(rec.rescaled_N - t) <= 0.5 / rp + 1e-9 * std::max(1.0, t);
}

}  // namespace

double collapse_metric(const std::vector<TrialRecord>& records, double t) {
  std::map<Eigen::Index, std::pair<double, int>> by_p;
  for (const auto& rec : records) {
    if (rec.failed || !at_rescaled(rec, t)) continue;
    auto& acc = by_p[rec.p];
    acc.first += rec.frob_error;
    acc.second += 1;
  }
  if (by_p.size() < 2) throw std::invalid_argument("collapse_metric: need records for at least two values of p");
  double lo = INFINITY, hi = -INFINITY, sum = 0.0;
  for (const auto& [p, acc] : by_p) {
    const double mean = acc.first / acc.second;
    lo = std::min(lo, mean);
    hi = std::max(hi, mean);
    sum += mean;
  }
  const double avg = sum / static_cast<double>(by_p.size());
  if (avg == 0.0) return 0.0;
  return (hi - lo) / avg;
}

std::vector<SeriesPoint> mean_curves(const std::vector<TrialRecord>& records) {
  std::map<std::pair<Eigen::Index, Eigen::Index>, SeriesPoint> acc;
  for (const auto& rec : records) {
    if (rec.failed) continue;
    auto [it, inserted] = acc.try_emplace({rec.p, rec.N}, SeriesPoint{rec.p, rec.N, rec.rescaled_N, 0.0, 0});
    it->second.mean_error += rec.frob_error;
    it->second.count += 1;
  }
  std::vector<SeriesPoint> out;
  for (auto& [key, pt] : acc) {
    pt.mean_error /= pt.count;
    out.push_back(pt);
  }
  return out;
}

// ---------------------------------------------------------------------------
// CSV

namespace {

std::string fmt(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

template <class T>
T parse_number(const std::string& s, const char* field) {
  T v{};
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) {
    throw std::invalid_argument(std::string("csv: bad value '") + s + "' for " + field);
  }
  return v;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

}  // namespace

std::string format_csv(const std::vector<TrialRecord>& records) {
  std::string out = std::string(kCsvHeader) + '\n';
  for (const auto& r : records) {
    if (r.failed) continue;
    out += r.model + ',' + std::to_string(r.p) + ',' + std::to_string(r.k) + ',' + std::to_string(r.r) + ',' +
           std::to_string(r.N) + ',' + fmt(r.rescaled_N) + ',' + std::to_string(r.trial) + ',' +
           std::to_string(r.seed) + ',' + fmt(r.lambda) + ',' + fmt(r.frob_error) + ',' + fmt(r.relative_error) +
           ',' + fmt(r.nuclear_error) + ',' + std::to_string(r.iterations) + ',' + fmt(r.runtime_ms) + ',' +
           fmt(r.bound_value) + ',' + fmt(r.bound_ratio) + '\n';
  }
  return out;
}

void emit_csv(const std::vector<TrialRecord>& records, const std::string& path) {
  bool any = false;
  for (const auto& r : records) any = any || !r.failed;
  if (!any) throw std::invalid_argument("emit_csv: no successful records");
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << format_csv(records);
  if (!out) throw IoError("failed writing '" + path + "'");
}

std::vector<TrialRecord> parse_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line) || line != kCsvHeader) throw std::invalid_argument("csv: missing or unexpected header");
  std::vector<TrialRecord> out;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    const auto f = split(line, ',');
    if (f.size() != 16) throw std::invalid_argument("csv: expected 16 fields, got " + std::to_string(f.size()));
    TrialRecord r;
    r.model = f[0];
    r.p = parse_number<long long>(f[1], "p");
    r.k = parse_number<long long>(f[2], "k");
    r.r = parse_number<long long>(f[3], "r");
    r.N = parse_number<long long>(f[4], "N");
    r.rescaled_N = parse_number<double>(f[5], "rescaled_N");
    r.trial = parse_number<int>(f[6], "trial");
    r.seed = parse_number<std::uint64_t>(f[7], "seed");
    r.lambda = parse_number<double>(f[8], "lambda");
    r.frob_error = parse_number<double>(f[9], "frob_error");
    r.relative_error = parse_number<double>(f[10], "relative_error");
    r.nuclear_error = parse_number<double>(f[11], "nuclear_error");
    r.iterations = parse_number<int>(f[12], "iterations");
    r.runtime_ms = parse_number<double>(f[13], "runtime_ms");
    r.bound_value = parse_number<double>(f[14], "bound_value");
    r.bound_ratio = parse_number<double>(f[15], "bound_ratio");
    out.push_back(std::move(r));
  }
  return out;
}

std::vector<TrialRecord> read_csv(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_csv(ss.str());
}

void emit_failures(const std::vector<TrialRecord>& records, const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path + "'");
  out << "model,p,N,trial,seed,reason\n";
  for (const auto& r : records) {
    if (!r.failed) continue;
    std::string reason = r.failure;
    for (char& c : reason) {
      if (c == ',' || c == '\n' || c == '\r') c = ';';
    }
    out << r.model << ',' << r.p << ',' << r.N << ',' << r.trial << ',' << r.seed << ',' << reason << '\n';
  }
  if (!out) throw IoError("failed writing '" + path + "'");
}

}  // namespace lowrank
