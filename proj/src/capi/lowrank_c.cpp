#include "lowrank/lowrank.h"

#include <cstring>
#include <new>
#include <stdexcept>
#include <string>

#include "lowrank/analysis.hpp"
#include "lowrank/harness.hpp"
#include "lowrank/models.hpp"
#include "lowrank/observation_io.hpp"
#include "lowrank/random.hpp"
#include "lowrank/regsel.hpp"
#include "lowrank/solver.hpp"

struct lr_observations {
  lowrank::ObservationSet set;
};

struct lr_solution {
  lowrank::SolveResult result;
};

struct lr_experiment {
  lowrank::ExperimentConfig cfg;
};

struct lr_records {
  std::vector<lowrank::TrialRecord> rows;
};

struct lr_report {
  lowrank::RscReport report;
  std::string summary;
};

namespace {

thread_local std::string g_last_error;

lr_status fail(lr_status status, const char* message) {
  g_last_error = message;
  return status;
}

template <class Fn>
lr_status guarded(Fn&& fn) {
  g_last_error.clear();
  try {
    fn();
    return LR_OK;
  } catch (const lowrank::IoError& e) {
    return fail(LR_IO_ERROR, e.what());
  } catch (const lowrank::NumericError& e) {
    return fail(LR_NUMERIC_ERROR, e.what());
  } catch (const std::length_error& e) {
    return fail(LR_RESOURCE_LIMIT, e.what());
  } catch (const std::bad_alloc&) {
    return fail(LR_RESOURCE_LIMIT, "out of memory");
  } catch (const std::invalid_argument& e) {
    return fail(LR_INVALID_ARGUMENT, e.what());
  } catch (const std::out_of_range& e) {
    return fail(LR_INVALID_ARGUMENT, e.what());
  } catch (const std::exception& e) {
    return fail(LR_INTERNAL_ERROR, e.what());
  } catch (...) {
    return fail(LR_INTERNAL_ERROR, "unknown error");
  }
}

void require(const void* ptr, const char* name) {
  if (ptr == nullptr) throw std::invalid_argument(std::string(name) + " must not be NULL");
}

void copy_out(const double* src, std::size_t count, double* buffer, std::size_t length) {
  require(buffer, "buffer");
  if (length < count) {
    throw std::invalid_argument("buffer holds " + std::to_string(length) + " values, need " + std::to_string(count));
  }
  std::memcpy(buffer, src, count * sizeof(double));
}

lowrank::SolverConfig solver_config(const lr_solver_params* params) {
  lowrank::SolverConfig cfg;
  if (params == nullptr) return cfg;
  cfg.lambda = params->lambda;
  cfg.max_iters = params->max_iters;
  cfg.rel_tol = params->rel_tol;
  if (params->step > 0) cfg.step = params->step;
  cfg.acceleration = params->acceleration != 0;
  cfg.power_iters = params->power_iters;
  cfg.validate();
  return cfg;
}

void fill(lr_lambda* out, const lowrank::LambdaChoice& c) {
  out->value = c.value;
  out->solver_weight = c.solver_weight;
}

}  // namespace

extern "C" {

const char* lr_version(void) { return "0.1.0"; }

const char* lr_status_string(lr_status status) {
  switch (status) {
    case LR_OK: return "ok";
    case LR_INVALID_ARGUMENT: return "invalid argument";
    case LR_NUMERIC_ERROR: return "numeric error";
    case LR_IO_ERROR: return "i/o error";
    case LR_RESOURCE_LIMIT: return "resource limit";
    case LR_INTERNAL_ERROR: return "internal error";
  }
  return "unknown status";
}

const char* lr_last_error(void) { return g_last_error.c_str(); }

// ---------------------------------------------------------------------------

void lr_generate_params_init(lr_generate_params* params) {
  if (params == nullptr) return;
  params->model = "regression";
  params->k = 0;
  params->p = 20;
  params->r = 2;
  params->n = 200;
  params->nu = 1.0;
  params->gamma = 0.5;
  params->q = 0.0;
  params->rq = 1.0;
  params->signal_scale = 10.0;
  params->sigma_scale = 1.0;
  params->budget_bytes = lowrank::kDefaultOperatorBudgetBytes;
  params->seed = 1;
}

lr_status lr_generate(const lr_generate_params* params, lr_observations** out) {
  return guarded([&] {
    require(params, "params");
    require(out, "out");
    require(params->model, "model");
    using namespace lowrank;
    const ModelKind model = model_kind_from_string(params->model);
    const Eigen::Index p = params->p;
    const Eigen::Index k = params->k > 0 ? params->k : p;
    if (model == ModelKind::Var && k != p) throw std::invalid_argument("generate: VAR system matrices are square");
    const std::uint64_t truth_seed = derive_seed(params->seed, {1});
    const std::uint64_t data_seed = derive_seed(params->seed, {2});

    GroundTruth truth;
    const double scale = model == ModelKind::Var ? params->gamma : params->signal_scale;
    if (params->q == 0.0) {
      truth = generate_exact_lowrank(k, p, params->r, scale, truth_seed);
    } else {
      truth = generate_near_lowrank(k, p, params->q, params->rq, truth_seed);
      if (model == ModelKind::Var) {
        const double norm = operator_norm(truth.theta_star);
        truth.theta_star *= params->gamma / norm;
      }
    }

    auto handle = std::make_unique<lr_observations>();
    switch (model) {
      case ModelKind::Identity:
        handle->set = observe(identity_operator(k, p), truth.theta_star, params->nu, data_seed);
        break;
      case ModelKind::Multivar:
        if (!(params->sigma_scale > 0)) throw std::invalid_argument("generate: sigma_scale must be > 0");
        handle->set = sample_multivar(truth, params->n, params->sigma_scale * Matrix::Identity(p, p), params->nu,
                                      data_seed);
        break;
      case ModelKind::Var:
        handle->set = sample_var(make_var_params(truth.theta_star, params->nu, params->n, params->gamma), data_seed);
        break;
      case ModelKind::Compressed:
        handle->set = sample_compressed(truth, params->n, params->nu, data_seed, params->budget_bytes);
        break;
      default:
        throw std::invalid_argument("generate: unsupported model");
    }
    handle->set.seed = params->seed;
    *out = handle.release();
  });
}

lr_status lr_observations_save(const lr_observations* obs, const char* path) {
  return guarded([&] {
    require(obs, "observations");
    require(path, "path");
    lowrank::save_observation_set(obs->set, path);
  });
}

lr_status lr_observations_load(const char* path, lr_observations** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<lr_observations>();
    handle->set = lowrank::load_observation_set(path);
    *out = handle.release();
  });
}

void lr_observations_free(lr_observations* obs) { delete obs; }

lr_status lr_observations_get_info(const lr_observations* obs, lr_observations_info* out) {
  return guarded([&] {
    require(obs, "observations");
    require(out, "out");
    static const char* names[] = {"identity", "regression", "var", "compressed", "dense"};
    out->model = names[static_cast<int>(obs->set.kind())];
    out->k = obs->set.op->rows();
    out->p = obs->set.op->cols();
    out->num_observations = obs->set.num_observations();
    out->noise_level = obs->set.noise_level;
    out->seed = obs->set.seed;
    out->has_truth = obs->set.theta_star.size() > 0 ? 1 : 0;
  });
}

lr_status lr_observations_truth(const lr_observations* obs, double* buffer, size_t length) {
  return guarded([&] {
    require(obs, "observations");
    const auto& t = obs->set.theta_star;
    if (t.size() == 0) throw std::invalid_argument("observation set carries no ground truth");
    copy_out(t.data(), static_cast<std::size_t>(t.size()), buffer, length);
  });
}

// ---------------------------------------------------------------------------

lr_status lr_lambda_rule(const char* rule, const lr_lambda_params* params, lr_lambda* out) {
  return guarded([&] {
    require(rule, "rule");
    require(params, "params");
    require(out, "out");
    using namespace lowrank;
    switch (lambda_rule_from_string(rule)) {
      case LambdaRule::MultivarCor3:
        fill(out, lambda_multivar(params->nu, params->sigma_max, params->k > 0 ? params->k : params->p, params->p,
                                  params->n));
        break;
      case LambdaRule::VarCor4:
        fill(out, lambda_var(params->sigma_opnorm, params->gamma, params->p, params->n));
        break;
      case LambdaRule::CompressedLemma6:
        fill(out, lambda_compressed(params->nu, params->k > 0 ? params->k : params->p, params->p, params->n));
        break;
      default:
        throw std::invalid_argument("lambda rule '" + std::string(rule) + "' needs an observation set");
    }
  });
}

lr_status lr_lambda_generic(const lr_observations* obs, int draws, uint64_t seed, lr_lambda* out) {
  return guarded([&] {
    require(obs, "observations");
    require(out, "out");
    fill(out, lowrank::lambda_generic(obs->set, draws, seed));
  });
}

lr_status lr_lambda_select(const lr_observations* obs, const char* rule, int draws, uint64_t seed, lr_lambda* out) {
  return guarded([&] {
    require(obs, "observations");
    require(rule, "rule");
    require(out, "out");
    using namespace lowrank;
    const ObservationSet& s = obs->set;
    const Eigen::Index k = s.op->rows(), p = s.op->cols();
    const double nu = s.noise_level > 0 ? s.noise_level : kLambdaFloor;
    const std::string name = rule;
    const LambdaRule chosen = name == "auto" ? default_lambda_rule(s.kind()) : lambda_rule_from_string(name);
    switch (chosen) {
      case LambdaRule::MultivarCor3: {
        const auto* m = std::get_if<MultivarModel>(&s.model_params);
        if (m == nullptr || m->sigma_x.size() == 0) {
          throw std::invalid_argument("lambda rule multivar needs a regression observation set");
        }
        const double sigma_max = m->sigma_x.selfadjointView<Eigen::Lower>().eigenvalues().maxCoeff();
        fill(out, lambda_multivar(nu, sigma_max, k, p, m->n));
        break;
      }
      case LambdaRule::VarCor4: {
        const auto* v = std::get_if<VarParams>(&s.model_params);
        if (v == nullptr || v->sigma.size() == 0) throw std::invalid_argument("lambda rule var needs a VAR observation set");
        fill(out, lambda_var(operator_norm(v->sigma), v->gamma, p, v->n));
        break;
      }
      case LambdaRule::CompressedLemma6:
        fill(out, lambda_compressed(nu, k, p, s.num_observations()));
        break;
      case LambdaRule::GenericAdjoint:
        fill(out, lambda_generic(s, draws, seed));
        break;
      case LambdaRule::Manual:
        throw std::invalid_argument("lambda rule manual has no value to select");
    }
  });
}

// ---------------------------------------------------------------------------

void lr_solver_params_init(lr_solver_params* params) {
  if (params == nullptr) return;
  const lowrank::SolverConfig d;
  params->lambda = d.lambda;
  params->max_iters = d.max_iters;
  params->rel_tol = d.rel_tol;
  params->step = 0.0;
  params->acceleration = d.acceleration ? 1 : 0;
  params->power_iters = d.power_iters;
}

lr_status lr_solve(const lr_observations* obs, const lr_solver_params* params, lr_solution** out) {
  return guarded([&] {
    require(obs, "observations");
    require(params, "params");
    require(out, "out");
    auto handle = std::make_unique<lr_solution>();
    handle->result = lowrank::solve(obs->set, solver_config(params));
    *out = handle.release();
  });
}

lr_status lr_solve_noiseless(const lr_observations* obs, const lr_solver_params* params, double lambda0,
                             double decay, int stages, lr_solution** out) {
  return guarded([&] {
    require(obs, "observations");
    require(out, "out");
    lowrank::ContinuationSchedule schedule;
    if (lambda0 > 0) schedule.lambda0 = lambda0;
    schedule.decay = decay;
    schedule.stages = stages;
    lowrank::SolverConfig cfg = solver_config(params);
    auto handle = std::make_unique<lr_solution>();
    handle->result = lowrank::solve_noiseless(obs->set, schedule, cfg);
    *out = handle.release();
  });
}

void lr_solution_free(lr_solution* solution) { delete solution; }

lr_status lr_solution_get_info(const lr_solution* solution, lr_solution_info* out) {
  return guarded([&] {
    require(solution, "solution");
    require(out, "out");
    const auto& r = solution->result;
    out->rows = r.theta_hat.rows();
    out->cols = r.theta_hat.cols();
    out->iterations = r.iterations;
    out->converged = r.converged ? 1 : 0;
    out->lambda = r.lambda;
    out->step = r.step;
    out->objective = r.objective_trace.empty() ? 0.0 : r.objective_trace.back();
    out->trace_length = r.objective_trace.size();
    out->optimality_residual = r.optimality_residual;
    out->alignment_residual = r.alignment_residual;
    out->data_residual = r.data_residual;
    out->rank = r.theta_hat.size() > 0 ? lowrank::numerical_rank(r.theta_hat) : 0;
  });
}

lr_status lr_solution_theta(const lr_solution* solution, double* buffer, size_t length) {
  return guarded([&] {
    require(solution, "solution");
    const auto& t = solution->result.theta_hat;
    copy_out(t.data(), static_cast<std::size_t>(t.size()), buffer, length);
  });
}

lr_status lr_solution_trace(const lr_solution* solution, double* buffer, size_t length) {
  return guarded([&] {
    require(solution, "solution");
    const auto& t = solution->result.objective_trace;
    copy_out(t.data(), t.size(), buffer, length);
  });
}

lr_status lr_solution_errors(const lr_solution* solution, const lr_observations* obs, lr_errors* out) {
  return guarded([&] {
    require(solution, "solution");
    require(obs, "observations");
    require(out, "out");
    const auto& truth = obs->set.theta_star;
    const auto& est = solution->result.theta_hat;
    if (truth.size() == 0) throw std::invalid_argument("observation set carries no ground truth");
    if (truth.rows() != est.rows() || truth.cols() != est.cols()) {
      throw std::invalid_argument("solution and ground truth shapes differ");
    }
    const lowrank::Matrix diff = est - truth;
    out->frob = diff.norm();
    out->relative = truth.norm() > 0 ? out->frob / truth.norm() : out->frob;
    out->nuclear = lowrank::nuclear_norm(diff);
  });
}

// ---------------------------------------------------------------------------

lr_status lr_experiment_create(lr_experiment** out) {
  return guarded([&] {
    require(out, "out");
    *out = new lr_experiment();
  });
}

lr_status lr_experiment_load(const char* path, lr_experiment** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<lr_experiment>();
    handle->cfg = lowrank::load_experiment_config(path);
    *out = handle.release();
  });
}

lr_status lr_experiment_set(lr_experiment* cfg, const char* key, const char* value) {
  return guarded([&] {
    require(cfg, "config");
    require(key, "key");
    require(value, "value");
    lowrank::set_config_value(cfg->cfg, key, value);
  });
}

lr_status lr_experiment_validate(const lr_experiment* cfg) {
  return guarded([&] {
    require(cfg, "config");
    cfg->cfg.validate();
  });
}

lr_status lr_experiment_output_path(const lr_experiment* cfg, const char** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    *out = cfg->cfg.output_path.c_str();
  });
}

lr_status lr_experiment_run(const lr_experiment* cfg, lr_records** out) {
  return guarded([&] {
    require(cfg, "config");
    require(out, "out");
    auto handle = std::make_unique<lr_records>();
    handle->rows = lowrank::run_experiment(cfg->cfg);
    *out = handle.release();
  });
}

void lr_experiment_free(lr_experiment* cfg) { delete cfg; }

lr_status lr_records_count(const lr_records* records, size_t* total, size_t* failed) {
  return guarded([&] {
    require(records, "records");
    if (total) *total = records->rows.size();
    if (failed) {
      std::size_t f = 0;
      for (const auto& r : records->rows) f += r.failed ? 1 : 0;
      *failed = f;
    }
  });
}

lr_status lr_records_get(const lr_records* records, size_t index, lr_record* out) {
  return guarded([&] {
    require(records, "records");
    require(out, "out");
    const auto& r = records->rows.at(index);
    out->model = r.model.c_str();
    out->p = r.p;
    out->k = r.k;
    out->r = r.r;
    out->n_obs = r.N;
    out->rescaled_n = r.rescaled_N;
    out->trial = r.trial;
    out->seed = r.seed;
    out->lambda = r.lambda;
    out->frob_error = r.frob_error;
    out->relative_error = r.relative_error;
    out->nuclear_error = r.nuclear_error;
    out->iterations = r.iterations;
    out->runtime_ms = r.runtime_ms;
    out->bound_value = r.bound_value;
    out->bound_ratio = r.bound_ratio;
    out->failed = r.failed ? 1 : 0;
    out->failure = r.failure.c_str();
  });
}

lr_status lr_records_write_csv(const lr_records* records, const char* path) {
  return guarded([&] {
    require(records, "records");
    require(path, "path");
    lowrank::emit_csv(records->rows, path);
  });
}

lr_status lr_records_write_failures(const lr_records* records, const char* path) {
  return guarded([&] {
    require(records, "records");
    require(path, "path");
    lowrank::emit_failures(records->rows, path);
  });
}

lr_status lr_records_write_plot(const lr_records* records, const char* path) {
  return guarded([&] {
    require(records, "records");
    require(path, "path");
    lowrank::emit_plot(records->rows, path);
  });
}

lr_status lr_records_read_csv(const char* path, lr_records** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    auto handle = std::make_unique<lr_records>();
    handle->rows = lowrank::read_csv(path);
    *out = handle.release();
  });
}

lr_status lr_records_collapse(const lr_records* records, double rescaled_n, double* spread) {
  return guarded([&] {
    require(records, "records");
    require(spread, "spread");
    *spread = lowrank::collapse_metric(records->rows, rescaled_n);
  });
}

void lr_records_free(lr_records* records) { delete records; }

// ---------------------------------------------------------------------------

void lr_check_params_init(lr_check_params* params) {
  if (params == nullptr) return;
  params->kind = "wishart";
  params->k = 0;
  params->p = 50;
  params->n = 200;
  params->r = 10;
  params->gamma = 0.5;
  params->nu = 1.0;
  params->t = 0.2;
  params->trials = 200;
  params->test_matrices = 100;
  params->seed = 1;
  params->workers = 1;
}

lr_status lr_check_run(const lr_check_params* params, lr_report** out) {
  return guarded([&] {
    require(params, "params");
    require(params->kind, "kind");
    require(out, "out");
    using namespace lowrank;
    const std::string kind = params->kind;
    auto handle = std::make_unique<lr_report>();
    if (kind == "wishart") {
      handle->report = check_wishart_spectrum(params->p, params->n, Matrix::Identity(params->p, params->p),
                                              params->trials, params->seed, params->workers);
    } else if (kind == "var") {
      const GroundTruth truth =
          generate_exact_lowrank(params->p, params->p, params->r, params->gamma, derive_seed(params->seed, {1}));
      handle->report = check_var_spectrum(truth.theta_star, params->nu, params->n, params->trials,
                                          derive_seed(params->seed, {2}), params->workers);
    } else if (kind == "prop1") {
      const Eigen::Index k = params->k > 0 ? params->k : params->p;
      handle->report = check_prop1(k, params->p, params->n, params->trials, params->test_matrices, params->seed,
                                   params->workers);
    } else if (kind == "meta") {
      handle->report = check_meta_concentration(Matrix::Identity(params->n, params->n), params->t, params->trials,
                                                params->seed, params->workers);
    } else {
      throw std::invalid_argument("unknown check '" + kind + "'; expected wishart, var, prop1 or meta");
    }
    handle->summary = summary_text(handle->report);
    *out = handle.release();
  });
}

void lr_report_free(lr_report* report) { delete report; }

lr_status lr_report_get_info(const lr_report* report, lr_report_info* out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    const auto& r = report->report;
    out->trials = r.trials;
    out->passes = r.passes;
    out->pass_rate = r.pass_rate;
    out->theoretical_floor = r.theoretical_floor;
    out->floor_standard_error = r.floor_standard_error();
    out->meets_floor = r.meets_floor() ? 1 : 0;
  });
}

lr_status lr_report_summary(const lr_report* report, const char** out) {
  return guarded([&] {
    require(report, "report");
    require(out, "out");
    *out = report->summary.c_str();
  });
}

lr_status lr_report_write_csv(const lr_report* report, const char* path) {
  return guarded([&] {
    require(report, "report");
    require(path, "path");
    lowrank::write_report_csv(report->report, path);
  });
}

}  // extern "C"
