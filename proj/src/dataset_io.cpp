#include "gbq/dataset_io.hpp"

#include "gbq/error.hpp"

#include <algorithm>
#include <fstream>

namespace gbq {

namespace {

constexpr const char* kFormat = "gbq-dataset";
constexpr int kVersion = 1;

[[noreturn]] void schema_error(const std::string& what) {
  throw Error(ErrorKind::DatasetSchemaError, what);
}

template <typename T>
T field(const json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) schema_error(std::string("missing field '") + key + "'");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception& e) {
    schema_error(std::string("bad field '") + key + "': " + e.what());
  }
}

std::vector<double> doubles(const json& j, const char* key) {
  return field<std::vector<double>>(j, key);
}

}  // namespace

std::string axis_name(Axis a) {
  switch (a) {
    case Axis::X: return "x";
    case Axis::Y: return "y";
    case Axis::Z: return "z";
    case Axis::I: return "i";
  }
  return "?";
}

Axis parse_axis(const std::string& s) {
  if (s == "x") return Axis::X;
  if (s == "y") return Axis::Y;
  if (s == "z") return Axis::Z;
  schema_error("unknown axis '" + s + "'");
}

std::string shape_name(PulseShape s) { return s == PulseShape::Gaussian ? "gaussian" : "square"; }

PulseShape parse_shape(const std::string& s) {
  if (s == "gaussian") return PulseShape::Gaussian;
  if (s == "square") return PulseShape::Square;
  schema_error("unknown pulse shape '" + s + "'");
}

json to_json(const PSDSpec& spec) {
  return {{"axis", axis_name(spec.axis)}, {"T", spec.T}, {"M", spec.M}, {"values", spec.values}};
}

PSDSpec psd_from_json(const json& j) {
  PSDSpec s;
  s.axis = parse_axis(field<std::string>(j, "axis"));
  s.T = field<double>(j, "T");
  s.M = field<std::size_t>(j, "M");
  s.values = doubles(j, "values");
  try {
    validate(s);
  } catch (const Error& e) {
    schema_error(std::string("invalid PSD: ") + e.what());
  }
  return s;
}

json to_json(const PulseTrain& train) {
  json pulses = json::array();
  for (const auto& p : train.pulses) {
    pulses.push_back({{"tau", p.tau}, {"A", p.amplitude}, {"sigma", p.sigma}});
  }
  return {{"axis", axis_name(train.axis)}, {"shape", shape_name(train.shape)},
          {"pulses", pulses}};
}

PulseTrain pulse_train_from_json(const json& j) {
  PulseTrain t;
  t.axis = parse_axis(field<std::string>(j, "axis"));
  t.shape = j.contains("shape") ? parse_shape(field<std::string>(j, "shape"))
                                : PulseShape::Gaussian;
  for (const auto& p : field<json>(j, "pulses")) {
    t.pulses.push_back({field<double>(p, "tau"), field<double>(p, "A"), field<double>(p, "sigma")});
  }
  return t;
}

json to_json(const PulseSequence& seq) {
  json out = json::array();
  for (const auto& t : seq) out.push_back(to_json(t));
  return out;
}

PulseSequence pulse_sequence_from_json(const json& j) {
  if (!j.is_array()) schema_error("pulse sequence must be an array of trains");
  PulseSequence seq;
  for (const auto& t : j) seq.push_back(pulse_train_from_json(t));
  return seq;
}

json to_json(const SimulationConfig& cfg) {
  json noise = json::object();
  noise["x"] = cfg.noise_x ? to_json(*cfg.noise_x) : json(nullptr);
  noise["y"] = cfg.noise_y ? to_json(*cfg.noise_y) : json(nullptr);
  noise["z"] = cfg.noise_z ? to_json(*cfg.noise_z) : json(nullptr);
  return {{"T", cfg.T}, {"M", cfg.M}, {"K", cfg.K}, {"omega", cfg.omega}, {"noise", noise}};
}

SimulationConfig sim_config_from_json(const json& j) {
  SimulationConfig c;
  c.T = field<double>(j, "T");
  c.M = field<std::size_t>(j, "M");
  c.K = field<std::size_t>(j, "K");
  c.omega = field<double>(j, "omega");
  if (j.contains("noise")) {
    const json& n = j.at("noise");
    auto get = [&n](const char* k) -> std::optional<PSDSpec> {
      if (!n.contains(k) || n.at(k).is_null()) return std::nullopt;
      return psd_from_json(n.at(k));
    };
    c.noise_x = get("x");
    c.noise_y = get("y");
    c.noise_z = get("z");
  }
  try {
    validate(c);
  } catch (const Error& e) {
    schema_error(std::string("invalid simulation config: ") + e.what());
  }
  return c;
}

json to_json(const MeasurementRecord& rec) { return json(std::vector<double>(rec.begin(), rec.end())); }

MeasurementRecord record_from_json(const json& j) {
  if (!j.is_array() || j.size() != kNumMeasurements) {
    schema_error("measurements must hold exactly 18 numbers");
  }
  MeasurementRecord r{};
  for (int i = 0; i < kNumMeasurements; ++i) r[i] = j[i].get<double>();
  return r;
}

json to_json(const DatasetHeader& h, std::size_t count) {
  json axes = json::array();
  for (Axis a : h.control_axes) axes.push_back(axis_name(a));
  json preps = json::array();
  for (int p = 0; p < kNumPreps; ++p) preps.push_back(prep_name(p));
  const auto& r = h.randomization;
  return {
      {"format", kFormat},
      {"version", kVersion},
      {"name", h.name},
      {"scale", h.scale},
      {"split", h.split},
      {"seed", h.seed},
      {"count", count},
      {"unused", h.unused},
      {"simulation", to_json(h.sim)},
      {"pulse_shape", shape_name(h.shape)},
      {"control_axes", axes},
      {"n_max", h.n_max},
      {"feature_scale", {{"T", h.feature_scale.T}, {"A_ref", h.feature_scale.A_ref}}},
      {"randomization",
       {{"positions", r.randomize_positions},
        {"power", r.randomize_power},
        {"jitter_sigmas", r.jitter_sigmas},
        {"power_lo", r.power_lo},
        {"power_hi", r.power_hi},
        {"max_attempts", r.max_attempts}}},
      {"output_order",
       {{"layout", "prep-major"}, {"preps", preps}, {"observables", {"X", "Y", "Z"}}}},
  };
}

DatasetHeader header_from_json(const json& j) {
  if (field<std::string>(j, "format") != kFormat) schema_error("not a gbq dataset file");
  if (field<int>(j, "version") != kVersion) schema_error("unsupported dataset version");
  if (field<json>(j, "output_order").value("layout", "") != "prep-major") {
    schema_error("unsupported output ordering");
  }
  DatasetHeader h;
  h.name = field<std::string>(j, "name");
  h.scale = field<std::string>(j, "scale");
  h.split = field<std::string>(j, "split");
  h.seed = field<std::uint64_t>(j, "seed");
  h.unused = j.value("unused", std::size_t{0});
  h.sim = sim_config_from_json(field<json>(j, "simulation"));
  h.shape = parse_shape(field<std::string>(j, "pulse_shape"));
  for (const auto& a : field<std::vector<std::string>>(j, "control_axes")) {
    h.control_axes.push_back(parse_axis(a));
  }
  h.n_max = field<int>(j, "n_max");
  const json fs = field<json>(j, "feature_scale");
  h.feature_scale = {field<double>(fs, "T"), field<double>(fs, "A_ref")};
  const json r = field<json>(j, "randomization");
  h.randomization.randomize_positions = field<bool>(r, "positions");
  h.randomization.randomize_power = field<bool>(r, "power");
  h.randomization.jitter_sigmas = field<double>(r, "jitter_sigmas");
  h.randomization.power_lo = field<double>(r, "power_lo");
  h.randomization.power_hi = field<double>(r, "power_hi");
  h.randomization.max_attempts = field<int>(r, "max_attempts");
  if (h.control_axes.empty() || h.n_max < 1) schema_error("header has no control layout");
  return h;
}

json to_json(const DatasetExample& ex) {
  json wf = json::object();
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const auto& v = ex.waveform.axis(a);
    const bool zero = std::all_of(v.begin(), v.end(), [](double x) { return x == 0.0; });
    wf[axis_name(a)] = zero ? json::array() : json(v);
  }
  return {{"id", ex.id},
          {"orders", ex.orders},
          {"features", ex.features},
          {"pulses", to_json(ex.pulses)},
          {"waveform", wf},
          {"measurements", to_json(ex.measurements)},
          {"seeds", {{"example", ex.seed}}}};
}

DatasetExample example_from_json(const json& j, const DatasetHeader& h) {
  DatasetExample ex;
  ex.id = field<std::size_t>(j, "id");
  ex.orders = j.value("orders", std::vector<int>{});
  ex.features = field<std::vector<std::vector<double>>>(j, "features");
  const std::size_t width = 3 * h.control_axes.size();
  if (ex.features.size() != static_cast<std::size_t>(h.n_max)) {
    schema_error("feature sequence length differs from n_max");
  }
  for (const auto& v : ex.features) {
    if (v.size() != width) schema_error("feature width differs from 3 x control axes");
  }
  ex.pulses = j.contains("pulses") ? pulse_sequence_from_json(j.at("pulses"))
                                   : denormalize_features(ex.features, h.control_axes, h.shape,
                                                          h.feature_scale);
  ex.waveform = Waveform(h.sim.T, h.sim.M);
  const json wf = field<json>(j, "waveform");
  for (Axis a : {Axis::X, Axis::Y, Axis::Z}) {
    const auto key = axis_name(a);
    if (!wf.contains(key)) continue;
    auto v = wf.at(key).get<std::vector<double>>();
    if (v.empty()) continue;
    if (v.size() != h.sim.M) schema_error("waveform length differs from M");
    ex.waveform.axis(a) = std::move(v);
  }
  ex.measurements = record_from_json(field<json>(j, "measurements"));
  if (j.contains("seeds")) ex.seed = j.at("seeds").value("example", std::uint64_t{0});
  return ex;
}

void write_dataset(const Dataset& d, const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw Error(ErrorKind::Io, "cannot open " + path.string() + " for writing");
  out << to_json(d.header, d.examples.size()).dump() << '\n';
  for (const auto& ex : d.examples) out << to_json(ex).dump() << '\n';
  if (!out) throw Error(ErrorKind::Io, "write failed for " + path.string());
}

Dataset read_dataset(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open " + path.string());
  Dataset d;
  std::string line;
  std::size_t lineno = 0;
  std::size_t expected = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      const json j = json::parse(line);
      if (lineno == 1) {
        d.header = header_from_json(j);
        expected = field<std::size_t>(j, "count");
      } else {
        d.examples.push_back(example_from_json(j, d.header));
      }
    } catch (const json::exception& e) {
      schema_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    } catch (const Error& e) {
      if (e.kind() != ErrorKind::DatasetSchemaError) throw;
      schema_error(path.string() + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  if (lineno == 0) schema_error(path.string() + ": empty dataset file");
  if (d.examples.size() != expected) {
    schema_error(path.string() + ": header count " + std::to_string(expected) + " but " +
                 std::to_string(d.examples.size()) + " examples");
  }
  return d;
}

std::filesystem::path split_path(const std::filesystem::path& dir, const std::string& name,
                                 const std::string& split) {
  return dir / (name + "." + split + ".jsonl");
}

}  // namespace gbq
