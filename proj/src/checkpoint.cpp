#include "gbq/checkpoint.hpp"

#include "gbq/dataset_io.hpp"
#include "gbq/error.hpp"

#include <fstream>

namespace gbq {

namespace {

constexpr const char* kFormat = "gbq-checkpoint";
constexpr int kVersion = 1;

[[noreturn]] void bad(const std::string& what) {
  throw Error(ErrorKind::DatasetSchemaError, "checkpoint: " + what);
}

json matrix_json(const Eigen::MatrixXd& m) {
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) data.push_back(m(r, c));
  }
  return {{"shape", {m.rows(), m.cols()}}, {"data", data}};
}

void matrix_from_json(const json& j, Eigen::MatrixXd& m, const std::string& name) {
  const auto shape = j.at("shape").get<std::vector<Eigen::Index>>();
  const auto data = j.at("data").get<std::vector<double>>();
  if (shape.size() != 2 || shape[0] != m.rows() || shape[1] != m.cols() ||
      data.size() != static_cast<std::size_t>(m.size())) {
    bad("shape mismatch for " + name);
  }
  std::size_t k = 0;
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    for (Eigen::Index c = 0; c < m.cols(); ++c) m(r, c) = data[k++];
  }
}

}  // namespace

json to_json(const ModelConfig& c) {
  json axes = json::array();
  for (Axis a : c.control_axes) axes.push_back(axis_name(a));
  return {{"input_width", c.input_width},
          {"n_max", c.n_max},
          {"hidden_initial", c.hidden_initial},
          {"hidden_final", c.hidden_final},
          {"omega", c.omega},
          {"T", c.T},
          {"M", c.M},
          {"control_axes", axes},
          {"pulse_shape", shape_name(c.shape)},
          {"feature_scale", {{"T", c.feature_scale.T}, {"A_ref", c.feature_scale.A_ref}}}};
}

ModelConfig model_config_from_json(const json& j) {
  ModelConfig c;
  try {
    c.input_width = j.at("input_width").get<int>();
    c.n_max = j.at("n_max").get<int>();
    c.hidden_initial = j.at("hidden_initial").get<int>();
    c.hidden_final = j.at("hidden_final").get<int>();
    c.omega = j.at("omega").get<double>();
    c.T = j.at("T").get<double>();
    c.M = j.at("M").get<std::size_t>();
    c.control_axes.clear();
    for (const auto& a : j.at("control_axes")) c.control_axes.push_back(parse_axis(a.get<std::string>()));
    c.shape = parse_shape(j.at("pulse_shape").get<std::string>());
    c.feature_scale = {j.at("feature_scale").at("T").get<double>(),
                       j.at("feature_scale").at("A_ref").get<double>()};
  } catch (const json::exception& e) {
    bad(std::string("bad architecture block: ") + e.what());
  }
  return c;
}

json to_json(const ModelParams& p) {
  json out = json::object();
  const auto names = p.names();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) out[names[i]] = matrix_json(*ts[i]);
  return out;
}

void params_from_json(const json& j, ModelParams& into) {
  const auto names = into.names();
  const auto ts = into.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    if (!j.contains(names[i])) bad("missing tensor " + names[i]);
    try {
      matrix_from_json(j.at(names[i]), *ts[i], names[i]);
    } catch (const json::exception& e) {
      bad("bad tensor " + names[i] + ": " + e.what());
    }
  }
}

json to_json(const ModelState& m, const json& metadata) {
  return {{"format", kFormat},
          {"version", kVersion},
          {"architecture", to_json(m.config)},
          {"init", {{"scheme", "glorot-uniform, zero bias"}, {"seed", m.init_seed}}},
          {"parameter_count", m.params.count()},
          {"weights", to_json(m.params)},
          {"adam", {{"step", m.adam.step}, {"m", to_json(m.adam.m)}, {"v", to_json(m.adam.v)}}},
          {"metadata", metadata.is_null() ? json::object() : metadata}};
}

ModelState model_from_json(const json& j, json* metadata) {
  if (j.value("format", "") != kFormat) bad("not a gbq checkpoint");
  if (j.value("version", 0) != kVersion) bad("unsupported checkpoint version");
  ModelState m;
  m.config = model_config_from_json(j.at("architecture"));
  m.params = make_params(m.config);
  params_from_json(j.at("weights"), m.params);
  m.adam.m = m.params.zeros_like();
  m.adam.v = m.params.zeros_like();
  if (j.contains("adam")) {
    m.adam.step = j.at("adam").at("step").get<std::int64_t>();
    params_from_json(j.at("adam").at("m"), m.adam.m);
    params_from_json(j.at("adam").at("v"), m.adam.v);
  }
  if (j.contains("init")) m.init_seed = j.at("init").value("seed", std::uint64_t{0});
  if (metadata) *metadata = j.value("metadata", json::object());
  return m;
}

void save_checkpoint(const ModelState& m, const std::filesystem::path& path, const json& metadata) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  const auto tmp = path.string() + ".tmp";
  {
    std::ofstream out(tmp);
    if (!out) throw Error(ErrorKind::Io, "cannot write " + tmp);
    out << to_json(m, metadata).dump() << '\n';
    if (!out) throw Error(ErrorKind::Io, "write failed for " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

ModelState load_checkpoint(const std::filesystem::path& path, json* metadata) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    bad(path.string() + ": " + e.what());
  }
  return model_from_json(j, metadata);
}

}  // namespace gbq
