#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "lowrank/operators.hpp"
#include "lowrank/regsel.hpp"
#include "lowrank/solver.hpp"

namespace lowrank {

/// One sweep over (p, rescaled sample size t, trial) for a single model.
///
/// Sample size convention: for regression and VAR the sample size N counts
/// observed vectors (n = N), for compressed sensing it counts scalar
/// observations. In every case N = round(t·r·p) and rescaled_N = N/(r·p).
struct ExperimentConfig {
  ModelKind model = ModelKind::Multivar;
  std::vector<Eigen::Index> p_list{40};
  std::optional<Eigen::Index> k;  // unset: square, k = p
  Eigen::Index r = 10;
  double nu = 1.0;
  double gamma = 0.5;             // VAR: ‖Θ*‖op
  double sigma_scale = 1.0;       // regression: Σ = sigma_scale·I
  std::vector<double> rescaled_grid{2, 3, 4, 5, 6, 8, 10};
  int trials_per_point = 20;
  std::uint64_t master_seed = 1;
  std::optional<LambdaRule> lambda_rule;  // unset: model default
  double manual_lambda = 0.0;             // used with LambdaRule::Manual (solver weight)
  int generic_draws = 50;
  double signal_scale = 10.0;             // singular values of Θ* (VAR uses gamma)
  SolverConfig solver;
  bool allow_large_compressed = false;    // compressed sensing with p > 40
  double operator_budget_bytes = kDefaultOperatorBudgetBytes;
  std::string output_path;
  unsigned workers = 1;

  void validate() const;
  Eigen::Index k_for(Eigen::Index p) const { return k ? *k : p; }
  LambdaRule effective_lambda_rule() const;
};

/// Largest compressed-sensing p accepted without allow_large_compressed.
inline constexpr Eigen::Index kCompressedDeskMaxP = 40;

LambdaRule default_lambda_rule(ModelKind model);

/// Parses the flat `key = value` config format; unknown keys are rejected.
ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);
/// Applies one key/value pair, as found in a config file.
void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value);

struct TrialRecord {
  std::string model;
  Eigen::Index p = 0, k = 0, r = 0, N = 0;
  double rescaled_N = 0.0;
  int trial = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;  // weight handed to the solver
  double frob_error = 0.0;
  double relative_error = 0.0;
  double nuclear_error = 0.0;
  int iterations = 0;
  double runtime_ms = 0.0;
  double bound_value = 0.0;
  double bound_ratio = 0.0;
  // Not serialized.
  int grid_index = 0;
  bool failed = false;
  std::string failure;
};

/// Seed of trial `trial` at grid point `grid_index` for dimension p.
std::uint64_t trial_seed(std::uint64_t master_seed, Eigen::Index p, int grid_index, int trial);

/// Runs a single trial; errors are captured in the record, never thrown.
TrialRecord run_trial(const ExperimentConfig& cfg, Eigen::Index p, int grid_index, int trial);

/// Every trial of the sweep, sorted by (p, grid index, trial). Failed trials
/// are included with failed = true.
std::vector<TrialRecord> run_experiment(const ExperimentConfig& cfg);

/// (max_p m(p) − min_p m(p)) / mean_p m(p), with m(p) the mean frob_error over
/// successful records whose N equals round(t·r·p).
double collapse_metric(const std::vector<TrialRecord>& records, double t);

/// Mean frob_error per (p, N) over successful records.
struct SeriesPoint {
  Eigen::Index p;
  Eigen::Index N;
  double rescaled_N;
  double mean_error;
  int count;
};
std::vector<SeriesPoint> mean_curves(const std::vector<TrialRecord>& records);

inline constexpr const char* kCsvHeader =
    "model,p,k,r,N,rescaled_N,trial,seed,lambda,frob_error,relative_error,nuclear_error,iterations,runtime_ms,"
    "bound_value,bound_ratio";

/// Writes successful records (header plus one row each).
void emit_csv(const std::vector<TrialRecord>& records, const std::string& path);
std::string format_csv(const std::vector<TrialRecord>& records);
std::vector<TrialRecord> parse_csv(const std::string& text);
std::vector<TrialRecord> read_csv(const std::string& path);
/// Failed trials as `model,p,N,trial,seed,reason`.
void emit_failures(const std::vector<TrialRecord>& records, const std::string& path);

/// SVG with two panels: error against N and against N/(rp), log error axis,
/// one series per p.
std::string render_plot(const std::vector<TrialRecord>& records);
void emit_plot(const std::vector<TrialRecord>& records, const std::string& path);

}  // namespace lowrank
