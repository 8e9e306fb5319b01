#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "lowrank/harness.hpp"
#include "lowrank/observation_io.hpp"

namespace lowrank {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

template <class T>
T number(const std::string& key, const std::string& text) {
  T v{};
  auto [end, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
  if (ec != std::errc() || end != text.data() + text.size()) {
    throw std::invalid_argument("config: bad value '" + text + "' for key '" + key + "'");
  }
  return v;
}

bool boolean(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes") return true;
  if (text == "false" || text == "0" || text == "no") return false;
  throw std::invalid_argument("config: bad boolean '" + text + "' for key '" + key + "'");
}

template <class T>
std::vector<T> number_list(const std::string& key, const std::string& text) {
  std::vector<T> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(number<T>(key, trim(item)));
  if (out.empty()) throw std::invalid_argument("config: empty list for key '" + key + "'");
  return out;
}

}  // namespace

void set_config_value(ExperimentConfig& cfg, const std::string& key, const std::string& value) {
  if (key == "model") {
    cfg.model = model_kind_from_string(value);
  } else if (key == "p_list") {
    const auto ps = number_list<long long>(key, value);
    cfg.p_list.assign(ps.begin(), ps.end());
  } else if (key == "k") {
    if (value == "square") {
      cfg.k.reset();
    } else {
      cfg.k = number<long long>(key, value);
    }
  } else if (key == "r") {
    cfg.r = number<long long>(key, value);
  } else if (key == "nu") {
    cfg.nu = number<double>(key, value);
  } else if (key == "gamma") {
    cfg.gamma = number<double>(key, value);
  } else if (key == "sigma_spec") {
    if (value == "identity") {
      cfg.sigma_scale = 1.0;
    } else if (value.rfind("scaled_identity:", 0) == 0) {
      cfg.sigma_scale = number<double>(key, value.substr(16));
    } else {
      throw std::invalid_argument("config: sigma_spec must be 'identity' or 'scaled_identity:<c>'");
    }
  } else if (key == "rescaled_grid") {
    cfg.rescaled_grid = number_list<double>(key, value);
  } else if (key == "trials_per_point") {
    cfg.trials_per_point = number<int>(key, value);
  } else if (key == "master_seed") {
    cfg.master_seed = number<std::uint64_t>(key, value);
  } else if (key == "lambda_rule") {
    if (value == "auto") {
      cfg.lambda_rule.reset();
    } else if (value == "multivar" || value == "regression" || value == "var" || value == "compressed" ||
               value == "generic") {
      cfg.lambda_rule = lambda_rule_from_string(value);
    } else {
      cfg.lambda_rule = LambdaRule::Manual;
      cfg.manual_lambda = number<double>(key, value);
    }
  } else if (key == "generic_draws") {
    cfg.generic_draws = number<int>(key, value);
  } else if (key == "signal_scale") {
    cfg.signal_scale = number<double>(key, value);
  } else if (key == "solver.max_iters") {
    cfg.solver.max_iters = number<int>(key, value);
  } else if (key == "solver.rel_tol") {
    cfg.solver.rel_tol = number<double>(key, value);
  } else if (key == "solver.step") {
    if (value == "auto") {
      cfg.solver.step.reset();
    } else {
      cfg.solver.step = number<double>(key, value);
    }
  } else if (key == "solver.acceleration") {
    cfg.solver.acceleration = boolean(key, value);
  } else if (key == "solver.power_iters") {
    cfg.solver.power_iters = number<int>(key, value);
  } else if (key == "allow_large_compressed") {
    cfg.allow_large_compressed = boolean(key, value);
  } else if (key == "operator_budget_bytes") {
    cfg.operator_budget_bytes = number<double>(key, value);
  } else if (key == "output_path") {
    cfg.output_path = value;
  } else if (key == "workers") {
    cfg.workers = number<unsigned>(key, value);
  } else {
    throw std::invalid_argument("config: unknown key '" + key + "'");
  }
}

ExperimentConfig parse_experiment_config(const std::string& text) {
  ExperimentConfig cfg;
  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw std::invalid_argument("config: line " + std::to_string(lineno) + " is not 'key = value'");
    }
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      set_config_value(cfg, key, value);
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(std::string(e.what()) + " (line " + std::to_string(lineno) + ")");
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read config '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_experiment_config(ss.str());
}

}  // namespace lowrank
