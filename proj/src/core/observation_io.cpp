#include "lowrank/observation_io.hpp"

#include <bit>
#include <charconv>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <vector>

namespace lowrank {

namespace {

static_assert(std::endian::native == std::endian::little, "payload format assumes a little-endian host");

constexpr const char* kFormat = "lowrank-observations-v1";

struct ArraySpec {
  std::string name;
  Eigen::Index rows, cols;
};

std::string format_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& s, const std::string& key) {
  double v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw IoError("observation header: bad number for '" + key + "'");
  return v;
}

long long parse_int(const std::string& s, const std::string& key) {
  long long v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw IoError("observation header: bad integer for '" + key + "'");
  return v;
}

std::uint64_t parse_u64(const std::string& s, const std::string& key) {
  std::uint64_t v = 0;
  auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || end != s.data() + s.size()) throw IoError("observation header: bad integer for '" + key + "'");
  return v;
}

void write_row_major(std::ofstream& out, const Matrix& m) {
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = m;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
}

Matrix read_row_major(std::ifstream& in, Eigen::Index rows, Eigen::Index cols) {
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(rows, cols);
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!in) throw IoError("observation payload: truncated file");
  return rm;
}

Matrix as_row(const Vector& v) { return v.transpose(); }

// Row i holds Xᵢ flattened row-major.
Matrix observations_row_major(const MaterializedOperator& op) {
  Matrix out(op.num_observations(), op.rows() * op.cols());
  for (Eigen::Index i = 0; i < op.num_observations(); ++i) {
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x = op.observation_matrix(i);
    out.row(i) = Eigen::Map<const Vector>(x.data(), x.size()).transpose();
  }
  return out;
}

Matrix observations_col_major(const Matrix& row_major_rows, Eigen::Index k, Eigen::Index p) {
  Matrix out(row_major_rows.rows(), k * p);
  for (Eigen::Index i = 0; i < row_major_rows.rows(); ++i) {
    const Vector flat = row_major_rows.row(i).transpose();
    const Matrix x = Eigen::Map<const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        flat.data(), k, p);
    out.row(i) = Eigen::Map<const Vector>(x.data(), x.size()).transpose();
  }
  return out;
}

}  // namespace

void save_observation_set(const ObservationSet& obs, const std::string& path) {
  validate(obs);
  const LinearMatrixOperator& op = *obs.op;
  std::vector<std::pair<std::string, Matrix>> arrays;
  std::vector<std::pair<std::string, std::string>> scalars;
  arrays.emplace_back("y", as_row(obs.y));

  switch (op.kind()) {
    case ModelKind::Identity:
      break;
    case ModelKind::Multivar: {
      const auto& design_op = dynamic_cast<const DesignOperator&>(op);
      arrays.emplace_back("design", design_op.design());
      if (const auto* m = std::get_if<MultivarModel>(&obs.model_params)) {
        scalars.emplace_back("n", std::to_string(m->n));
        if (m->sigma_x.size()) arrays.emplace_back("sigma_x", m->sigma_x);
      }
      break;
    }
    case ModelKind::Var: {
      const auto& design_op = dynamic_cast<const DesignOperator&>(op);
      arrays.emplace_back("design", design_op.design());
      if (const auto* v = std::get_if<VarParams>(&obs.model_params)) {
        scalars.emplace_back("n", std::to_string(v->n));
        scalars.emplace_back("gamma", format_double(v->gamma));
        if (v->sigma.size()) arrays.emplace_back("sigma", v->sigma);
      }
      break;
    }
    case ModelKind::Compressed:
    case ModelKind::Dense: {
      const auto* mat = dynamic_cast<const MaterializedOperator*>(&op);
      auto owned = mat ? nullptr : materialize(op);
      arrays.emplace_back("observations", observations_row_major(mat ? *mat : *owned));
      break;
    }
  }
  if (obs.theta_star.size()) arrays.emplace_back("theta_star", obs.theta_star);
  if (obs.noise.size()) arrays.emplace_back("noise", as_row(obs.noise));

  const std::filesystem::path header_path(path);
  const std::filesystem::path data_path = header_path.string() + ".bin";

  std::ofstream header(header_path, std::ios::binary | std::ios::trunc);
  if (!header) throw IoError("cannot write '" + header_path.string() + "'");
  header << "format=" << kFormat << '\n'
         << "model=" << to_string(op.kind()) << '\n'
         << "k=" << op.rows() << '\n'
         << "p=" << op.cols() << '\n'
         << "N=" << op.num_observations() << '\n'
         << "noise_level=" << format_double(obs.noise_level) << '\n'
         << "seed=" << obs.seed << '\n'
         << "data=" << data_path.filename().string() << '\n';
  for (const auto& [key, value] : scalars) header << key << '=' << value << '\n';
  for (const auto& [name, m] : arrays) header << "array=" << name << ',' << m.rows() << ',' << m.cols() << '\n';
  if (!header) throw IoError("failed writing '" + header_path.string() + "'");

  std::ofstream data(data_path, std::ios::binary | std::ios::trunc);
  if (!data) throw IoError("cannot write '" + data_path.string() + "'");
  for (const auto& [name, m] : arrays) write_row_major(data, m);
  if (!data) throw IoError("failed writing '" + data_path.string() + "'");
}

ObservationSet load_observation_set(const std::string& path) {
  const std::filesystem::path header_path(path);
  std::ifstream header(header_path);
  if (!header) throw IoError("cannot read '" + header_path.string() + "'");

  std::map<std::string, std::string> kv;
  std::vector<ArraySpec> specs;
  std::string line;
  while (std::getline(header, line)) {
    if (line.empty() || line[0] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw IoError("observation header: malformed line '" + line + "'");
    std::string key = line.substr(0, eq), value = line.substr(eq + 1);
    if (key == "array") {
      std::stringstream ss(value);
      std::string name, rows, cols;
      if (!std::getline(ss, name, ',') || !std::getline(ss, rows, ',') || !std::getline(ss, cols)) {
        throw IoError("observation header: malformed array line '" + line + "'");
      }
      specs.push_back({name, parse_int(rows, "array rows"), parse_int(cols, "array cols")});
    } else {
      kv[key] = value;
    }
  }
  auto need = [&](const std::string& key) -> const std::string& {
    auto it = kv.find(key);
    if (it == kv.end()) throw IoError("observation header: missing key '" + key + "'");
    return it->second;
  };
  if (need("format") != kFormat) throw IoError("observation header: unsupported format '" + kv["format"] + "'");

  const ModelKind kind = model_kind_from_string(need("model"));
  const Eigen::Index k = parse_int(need("k"), "k"), p = parse_int(need("p"), "p");
  const Eigen::Index n_obs = parse_int(need("N"), "N");

  std::map<std::string, Matrix> arrays;
  {
    const std::filesystem::path data_path = header_path.parent_path() / need("data");
    std::ifstream data(data_path, std::ios::binary);
    if (!data) throw IoError("cannot read '" + data_path.string() + "'");
    for (const auto& spec : specs) {
      if (spec.rows < 0 || spec.cols < 0) throw IoError("observation header: negative array shape");
      arrays[spec.name] = read_row_major(data, spec.rows, spec.cols);
    }
    data.peek();
    if (!data.eof()) throw IoError("observation payload: trailing bytes after declared arrays");
  }
  auto array = [&](const std::string& name) -> Matrix& {
    auto it = arrays.find(name);
    if (it == arrays.end()) throw IoError("observation payload: missing array '" + name + "'");
    return it->second;
  };

  ObservationSet obs;
  obs.noise_level = parse_double(need("noise_level"), "noise_level");
  obs.seed = parse_u64(need("seed"), "seed");
  obs.y = array("y").transpose();
  if (arrays.count("theta_star")) obs.theta_star = arrays["theta_star"];
  if (arrays.count("noise")) obs.noise = arrays["noise"].transpose();

  switch (kind) {
    case ModelKind::Identity:
      obs.op = std::make_shared<IdentityOperator>(k, p);
      obs.model_params = IdentityModel{};
      break;
    case ModelKind::Multivar: {
      obs.op = std::make_shared<DesignOperator>(array("design"), k, ModelKind::Multivar);
      MultivarModel m;
      m.n = array("design").rows();
      if (arrays.count("sigma_x")) m.sigma_x = arrays["sigma_x"];
      obs.model_params = std::move(m);
      break;
    }
    case ModelKind::Var: {
      obs.op = std::make_shared<DesignOperator>(array("design"), k, ModelKind::Var);
      VarParams v;
      v.theta_star = obs.theta_star;
      v.nu = obs.noise_level;
      v.n = array("design").rows();
      v.gamma = kv.count("gamma") ? parse_double(kv["gamma"], "gamma") : 0.0;
      if (arrays.count("sigma")) v.sigma = arrays["sigma"];
      obs.model_params = std::move(v);
      break;
    }
    case ModelKind::Compressed:
    case ModelKind::Dense:
      obs.op = std::make_shared<MaterializedOperator>(observations_col_major(array("observations"), k, p), k, p, kind);
      obs.model_params = CompressedModel{};
      break;
  }
  if (obs.op->rows() != k || obs.op->cols() != p || obs.op->num_observations() != n_obs) {
    throw IoError("observation header: dimensions disagree with stored arrays");
  }
  validate(obs);
  return obs;
}

}  // namespace lowrank
