// gbq: command-line front end for simulation, dataset generation, training,
// inspection, control and spectroscopy.

#include "gbq/checkpoint.hpp"
#include "gbq/controller.hpp"
#include "gbq/dataset.hpp"
#include "gbq/dataset_io.hpp"
#include "gbq/error.hpp"
#include "gbq/spectroscopy.hpp"
#include "gbq/trainer.hpp"

#include <CLI11.hpp>
#include <json.hpp>
#include <omp.h>

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#ifndef GBQ_VERSION
#define GBQ_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using gbq::json;

namespace {

constexpr int kExitUsage = 2;
constexpr int kExitData = 3;
constexpr int kExitNumerical = 4;

[[noreturn]] void usage(const std::string& what) { throw gbq::Error(gbq::ErrorKind::Usage, what); }

json read_json(const fs::path& p) {
  std::ifstream in(p);
  if (!in) throw gbq::Error(gbq::ErrorKind::Io, "cannot open " + p.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw gbq::Error(gbq::ErrorKind::DatasetSchemaError, p.string() + ": " + e.what());
  }
}

void write_text(const fs::path& p, const std::string& text) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p);
  if (!out) throw gbq::Error(gbq::ErrorKind::Io, "cannot write " + p.string());
  out << text;
  if (!out) throw gbq::Error(gbq::ErrorKind::Io, "write failed for " + p.string());
}

void write_json(const fs::path& p, const json& j) { write_text(p, j.dump(2) + "\n"); }

// Resolved options of the subcommand that ran, plus build identity.
json manifest(const CLI::App& sub, int threads) {
  json opts = json::object();
  for (const CLI::Option* o : sub.get_options()) {
    if (o->get_name() == "--help") continue;
    std::string key = o->get_lnames().empty() ? o->get_name() : o->get_lnames().front();
    const auto& r = o->results();
    if (r.empty()) {
      opts[key] = o->get_default_str();
    } else if (r.size() == 1) {
      opts[key] = r.front();
    } else {
      opts[key] = r;
    }
  }
  return {{"tool", "gbq"},
          {"version", GBQ_VERSION},
          {"command", sub.get_name()},
          {"threads", threads},
          {"options", opts}};
}

void write_manifest_dir(const fs::path& dir, const CLI::App& sub, int threads) {
  write_json(dir / "manifest.json", manifest(sub, threads));
}

void write_manifest_file(const fs::path& out, const CLI::App& sub, int threads) {
  write_json(fs::path(out.string() + ".manifest.json"), manifest(sub, threads));
}

gbq::DatasetId dataset_or_throw(const std::string& name) {
  if (auto id = gbq::parse_dataset_id(name)) return *id;
  std::string list;
  for (const auto& n : gbq::dataset_names()) list += "\n  " + n;
  throw gbq::Error(gbq::ErrorKind::UnknownDataset, "unknown dataset '" + name + "'; valid ids:" + list);
}

gbq::Scale scale_or_throw(const std::string& s) {
  if (auto sc = gbq::parse_scale(s)) return *sc;
  usage("unknown scale '" + s + "' (expected paper or desk)");
}

// Pulse file: {"T", "M", "trains": [...]}.
struct PulseFile {
  double T = 1.0;
  std::size_t M = 4096;
  gbq::PulseSequence seq;
};

PulseFile read_pulse_file(const fs::path& p) {
  const json j = read_json(p);
  PulseFile f;
  try {
    f.T = j.value("T", 1.0);
    f.M = j.value("M", std::size_t{4096});
    f.seq = gbq::pulse_sequence_from_json(j.at("trains"));
  } catch (const json::exception& e) {
    throw gbq::Error(gbq::ErrorKind::DatasetSchemaError, p.string() + ": " + e.what());
  }
  return f;
}

// Reorders a sequence onto the model's control axes; absent axes stay empty.
gbq::PulseSequence align(const gbq::PulseSequence& seq, const gbq::ModelConfig& cfg) {
  gbq::PulseSequence out;
  for (gbq::Axis a : cfg.control_axes) {
    gbq::PulseTrain t;
    t.axis = a;
    t.shape = cfg.shape;
    for (const auto& s : seq) {
      if (s.axis == a) t = s;
    }
    out.push_back(t);
  }
  for (const auto& s : seq) {
    if (std::find(cfg.control_axes.begin(), cfg.control_axes.end(), s.axis) == cfg.control_axes.end() &&
        !s.pulses.empty()) {
      throw gbq::Error(gbq::ErrorKind::ShapeMismatch,
                       "pulse file drives axis " + gbq::axis_name(s.axis) + " which the model does not control");
    }
  }
  return out;
}

json operator_json(const gbq::Operator2& m) {
  json rows = json::array();
  for (int r = 0; r < 2; ++r) {
    json row = json::array();
    for (int c = 0; c < 2; ++c) row.push_back({m(r, c).real(), m(r, c).imag()});
    rows.push_back(row);
  }
  return rows;
}

json record_json(const gbq::MeasurementRecord& rec) {
  json out = json::object();
  for (int p = 0; p < gbq::kNumPreps; ++p) {
    for (int o = 0; o < gbq::kNumObservables; ++o) {
      out[gbq::prep_name(p) + "/" + gbq::axis_name(gbq::observable_axis(o))] =
          rec[gbq::record_index(p, o)];
    }
  }
  return out;
}

gbq::SimulationConfig sim_config(const std::string& noise, double T, std::size_t M, std::size_t K) {
  gbq::SimulationConfig c;
  c.T = T;
  c.M = M;
  c.K = K;
  if (noise == "none") {
  } else if (noise == "z") {
    c.noise_z = gbq::sample_psd(gbq::Axis::Z, gbq::psd_z, T, M);
  } else if (noise == "x") {
    c.noise_x = gbq::sample_psd(gbq::Axis::X, gbq::psd_x, T, M);
  } else if (noise == "xz") {
    c.noise_x = gbq::sample_psd(gbq::Axis::X, gbq::psd_x, T, M);
    c.noise_z = gbq::sample_psd(gbq::Axis::Z, gbq::psd_z, T, M);
  } else {
    usage("unknown noise '" + noise + "' (expected none, z, x, xz)");
  }
  gbq::validate(c);
  return c;
}

gbq::PulseSequence cpmg_sequence(int order, const std::string& shape, const std::string& axis,
                                 double T, std::size_t M) {
  if (order == 0) return {};
  const gbq::Axis a = gbq::parse_axis(axis);
  return {gbq::parse_shape(shape) == gbq::PulseShape::Gaussian ? gbq::cpmg_gaussian(order, T, M, a)
                                                              : gbq::cpmg_square(order, T, M, a)};
}

std::vector<int> parse_orders(const std::string& s) {
  std::vector<int> out;
  std::stringstream ss(s);
  std::string part;
  try {
    while (std::getline(ss, part, ',')) {
      const auto dots = part.find("..");
      if (dots == std::string::npos) {
        out.push_back(std::stoi(part));
      } else {
        const int lo = std::stoi(part.substr(0, dots)), hi = std::stoi(part.substr(dots + 2));
        for (int n = lo; n <= hi; ++n) out.push_back(n);
      }
    }
  } catch (const std::exception&) {
    usage("bad order list '" + s + "' (expected e.g. 1..50 or 2,4,8)");
  }
  if (out.empty()) usage("empty order list");
  return out;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Graybox qubit toolkit: simulation, training, control and spectroscopy"};
  app.require_subcommand(1);
  app.set_config("--config", "", "Key-value config file; flags override it");
  int threads = 0;
  app.add_option("--threads", threads, "Worker threads (0: OpenMP default)")->envname("GBQ_THREADS");

  // simulate
  auto* sim = app.add_subcommand("simulate", "Monte Carlo expectations for one pulse sequence");
  std::string sim_pulses, sim_noise = "z", sim_shape = "gaussian", sim_axis = "x", sim_out;
  int sim_cpmg = 0;
  std::size_t sim_K = 1000, sim_M = 4096;
  double sim_T = 1.0;
  std::uint64_t sim_seed = 0;
  sim->add_option("--pulses", sim_pulses, "Pulse file (JSON)");
  sim->add_option("--cpmg", sim_cpmg, "Ideal CPMG order instead of a pulse file (0: free evolution)")
      ->capture_default_str();
  sim->add_option("--shape", sim_shape, "gaussian or square")->capture_default_str();
  sim->add_option("--axis", sim_axis, "Control axis for --cpmg")->capture_default_str();
  sim->add_option("--noise", sim_noise, "none, z, x or xz")->capture_default_str();
  sim->add_option("-K,--realizations", sim_K, "Noise realizations")->capture_default_str();
  sim->add_option("-M,--steps", sim_M, "Time steps")->capture_default_str();
  sim->add_option("-T,--duration", sim_T, "Evolution time")->capture_default_str();
  sim->add_option("--seed", sim_seed)->capture_default_str();
  sim->add_option("--out", sim_out, "Output JSON (stdout if omitted)");

  // generate-dataset
  auto* gen = app.add_subcommand("generate-dataset", "Build a train/test dataset pair");
  std::string gen_name, gen_scale = "desk", gen_out = "data";
  std::uint64_t gen_seed = 0;
  gen->add_option("--name", gen_name, "Dataset id")->required();
  gen->add_option("--scale", gen_scale, "paper or desk")->capture_default_str();
  gen->add_option("--seed", gen_seed)->capture_default_str();
  gen->add_option("--out", gen_out, "Output directory")->capture_default_str();

  // train
  auto* trn = app.add_subcommand("train", "Fit the graybox model to a dataset");
  std::string trn_data = "data", trn_name, trn_out = "runs", trn_resume;
  gbq::TrainConfig tc;
  std::uint64_t trn_init_seed = 0;
  trn->add_option("--data", trn_data, "Dataset directory")->capture_default_str();
  trn->add_option("--name", trn_name, "Dataset id")->required();
  trn->add_option("--out", trn_out, "Output directory")->capture_default_str();
  trn->add_option("--iterations", tc.iterations)->capture_default_str();
  trn->add_option("--batch-size", tc.batch_size, "0: automatic")->capture_default_str();
  trn->add_option("--lr", tc.adam.lr)->capture_default_str();
  trn->add_option("--seed", tc.seed, "Minibatch seed")->capture_default_str();
  trn->add_option("--init-seed", trn_init_seed, "Weight init seed")->capture_default_str();
  trn->add_option("--eval-every", tc.eval_every)->capture_default_str();
  trn->add_option("--checkpoint-every", tc.checkpoint_every)->capture_default_str();
  trn->add_option("--early-stop", tc.early_stop_mse, "Stop once train MSE falls below this");
  trn->add_option("--resume", trn_resume, "Checkpoint to resume from");

  // evaluate
  auto* ev = app.add_subcommand("evaluate", "Train and test MSE of a checkpoint");
  std::string ev_ckpt, ev_data = "data", ev_name, ev_out;
  ev->add_option("--checkpoint", ev_ckpt)->required();
  ev->add_option("--data", ev_data, "Dataset directory")->capture_default_str();
  ev->add_option("--dataset,--name", ev_name, "Dataset id")->required();
  ev->add_option("--out", ev_out, "Output JSON (stdout if omitted)");

  // predict / extract-vo
  auto* pr = app.add_subcommand("predict", "Model expectations for a pulse file");
  auto* xv = app.add_subcommand("extract-vo", "Reconstructed V_X, V_Y, V_Z for a pulse file");
  std::string pr_ckpt, pr_pulses, pr_out;
  for (auto* s : {pr, xv}) {
    s->add_option("--checkpoint", pr_ckpt)->required();
    s->add_option("--pulses", pr_pulses, "Pulse file (JSON)")->required();
    s->add_option("--out", pr_out, "Output JSON (stdout if omitted)");
  }

  // optimize-control
  auto* oc = app.add_subcommand("optimize-control", "Gate synthesis through a frozen model");
  std::string oc_ckpt, oc_gate = "I", oc_out;
  gbq::ControlConfig cc;
  oc->add_option("--checkpoint", oc_ckpt)->required();
  oc->add_option("--gate", oc_gate, "I, X, Y, Z, H or RX45")->capture_default_str();
  oc->add_option("--out", oc_out, "Output JSON")->required();
  oc->add_option("--restarts", cc.restarts)->capture_default_str();
  oc->add_option("--steps", cc.steps)->capture_default_str();
  oc->add_option("--lr", cc.adam.lr)->capture_default_str();
  oc->add_option("--seed", cc.seed)->capture_default_str();

  // estimate-spectrum
  auto* es = app.add_subcommand("estimate-spectrum", "Dephasing PSD from CPMG coherence decay");
  std::string es_ckpt, es_orders = "1..50", es_mode = "full", es_source = "model", es_out,
                       es_shape = "gaussian";
  std::size_t es_K = 1000, es_M = 4096;
  std::uint64_t es_seed = 0;
  es->add_option("--checkpoint", es_ckpt, "Required for --source model");
  es->add_option("--orders", es_orders, "e.g. 1..50 or 2,4,8")->capture_default_str();
  es->add_option("--mode", es_mode, "harmonic or full")->capture_default_str();
  es->add_option("--source", es_source, "model, simulation or oracle")->capture_default_str();
  es->add_option("--shape", es_shape, "Pulse shape for simulation/oracle")->capture_default_str();
  es->add_option("-K,--realizations", es_K)->capture_default_str();
  es->add_option("-M,--steps", es_M)->capture_default_str();
  es->add_option("--seed", es_seed)->capture_default_str();
  es->add_option("--out", es_out, "Output CSV")->required();

  // convergence-study
  auto* cs = app.add_subcommand("convergence-study", "MC drift against realization count");
  std::string cs_noise = "xz", cs_shape = "gaussian", cs_axis = "x", cs_out, cs_pulses;
  int cs_cpmg = 8;
  std::vector<std::size_t> cs_grid{10, 20, 50, 100, 200, 500, 1000, 2000};
  std::size_t cs_M = 4096;
  std::uint64_t cs_seed = 0;
  cs->add_option("--pulses", cs_pulses, "Pulse file (JSON)");
  cs->add_option("--cpmg", cs_cpmg)->capture_default_str();
  cs->add_option("--shape", cs_shape)->capture_default_str();
  cs->add_option("--axis", cs_axis)->capture_default_str();
  cs->add_option("--noise", cs_noise)->capture_default_str();
  cs->add_option("--k-grid", cs_grid, "Realization counts")->delimiter(',')->capture_default_str();
  cs->add_option("-M,--steps", cs_M)->capture_default_str();
  cs->add_option("--seed", cs_seed)->capture_default_str();
  cs->add_option("--out", cs_out, "Output CSV")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : kExitUsage;
  }

  try {
    if (threads < 0) usage("--threads must be non-negative");
    if (threads > 0) omp_set_num_threads(threads);
    const int used_threads = threads > 0 ? threads : omp_get_max_threads();

    if (*sim) {
      PulseFile pf{sim_T, sim_M, {}};
      if (!sim_pulses.empty()) {
        if (sim_cpmg != 0) usage("--pulses and --cpmg are exclusive");
        pf = read_pulse_file(sim_pulses);
      } else {
        pf.seq = cpmg_sequence(sim_cpmg, sim_shape, sim_axis, sim_T, sim_M);
      }
      const auto cfg = sim_config(sim_noise, pf.T, pf.M, sim_K);
      const auto rec = gbq::simulate(cfg, gbq::discretize(pf.seq, pf.T, pf.M), sim_seed);
      const json out = {{"simulation", gbq::to_json(cfg)},
                        {"pulses", gbq::to_json(pf.seq)},
                        {"seed", sim_seed},
                        {"measurements", record_json(rec)}};
      if (sim_out.empty()) {
        std::cout << out.dump(2) << "\n";
      } else {
        write_json(sim_out, out);
        write_manifest_file(sim_out, *sim, used_threads);
      }
    } else if (*gen) {
      const auto id = dataset_or_throw(gen_name);
      const auto split = gbq::generate_dataset(id, scale_or_throw(gen_scale), gen_seed);
      const fs::path dir(gen_out);
      fs::create_directories(dir);
      gbq::write_dataset(split.train, gbq::split_path(dir, gen_name, "train"));
      gbq::write_dataset(split.test, gbq::split_path(dir, gen_name, "test"));
      write_manifest_dir(dir, *gen, used_threads);
      std::cout << gen_name << ": " << split.train.examples.size() << " train, "
                << split.test.examples.size() << " test\n";
    } else if (*trn) {
      dataset_or_throw(trn_name);
      const auto train_d = gbq::read_dataset(gbq::split_path(trn_data, trn_name, "train"));
      const auto test_d = gbq::read_dataset(gbq::split_path(trn_data, trn_name, "test"));
      const fs::path dir(trn_out);
      fs::create_directories(dir);
      gbq::ModelState m = trn_resume.empty()
                              ? gbq::make_model(gbq::model_config_for(train_d.header), trn_init_seed)
                              : gbq::load_checkpoint(trn_resume);
      const auto ps = gbq::prepare(train_d, m.config, gbq::Role::Train);
      const auto pt = gbq::prepare(test_d, m.config, gbq::Role::Test);
      tc.checkpoint_path = dir / "checkpoint.json";
      const json meta = {{"dataset", trn_name},
                         {"scale", train_d.header.scale},
                         {"noise",
                          {{"x", train_d.header.sim.noise_x.has_value()},
                           {"z", train_d.header.sim.noise_z.has_value()}}},
                         {"train", gbq::to_json(tc)}};
      const auto log = gbq::train(m, ps, &pt, tc, [](const gbq::TrainLogRow& r) {
        if (r.test_mse) {
          std::printf("iter %6d  train %.4e  test %.4e  %.1fs\n", r.iteration, r.train_mse,
                      *r.test_mse, r.wall_seconds);
          std::fflush(stdout);
        }
      });
      gbq::save_checkpoint(m, tc.checkpoint_path, meta);
      gbq::write_log_csv(log, dir / "train_log.csv");
      write_json(dir / "summary.json", gbq::summary_json(log, trn_name));
      write_manifest_dir(dir, *trn, used_threads);
    } else if (*ev) {
      dataset_or_throw(ev_name);
      const auto m = gbq::load_checkpoint(ev_ckpt);
      const auto train_d = gbq::read_dataset(gbq::split_path(ev_data, ev_name, "train"));
      const auto test_d = gbq::read_dataset(gbq::split_path(ev_data, ev_name, "test"));
      const json out = {
          {"dataset", ev_name},
          {"train_mse", gbq::evaluate_mse(m, gbq::prepare(train_d, m.config, gbq::Role::Test))},
          {"test_mse", gbq::evaluate_mse(m, gbq::prepare(test_d, m.config, gbq::Role::Test))}};
      if (ev_out.empty()) {
        std::cout << out.dump(2) << "\n";
      } else {
        write_json(ev_out, out);
        write_manifest_file(ev_out, *ev, used_threads);
      }
    } else if (*pr || *xv) {
      const auto m = gbq::load_checkpoint(pr_ckpt);
      const auto pf = read_pulse_file(pr_pulses);
      if (pf.M != m.config.M || pf.T != m.config.T) {
        throw gbq::Error(gbq::ErrorKind::ShapeMismatch, "pulse file grid differs from the model's");
      }
      const auto seq = align(pf.seq, m.config);
      const auto feats = gbq::normalize_features(seq, m.config.feature_scale, m.config.n_max);
      const auto u = gbq::control_unitary(gbq::discretize(seq, m.config.T, m.config.M), m.config.omega);
      json out;
      if (*pr) {
        out = {{"measurements", record_json(gbq::predict(m, feats, u))}};
      } else {
        const auto rep = gbq::extract_vo(m, feats, u);
        out = json::object();
        const char* names[3] = {"V_X", "V_Y", "V_Z"};
        for (int k = 0; k < 3; ++k) {
          const auto& p = rep.params[static_cast<std::size_t>(k)];
          out[names[k]] = {{"psi", p.psi}, {"theta", p.theta}, {"delta", p.delta}, {"mu", p.mu},
                           {"matrix", operator_json(rep.vo[static_cast<std::size_t>(k)])}};
        }
        out["U_c"] = operator_json(rep.u_c);
        if (pr_out.empty()) {
          for (int k = 0; k < 3; ++k) {
            const auto& v = rep.vo[static_cast<std::size_t>(k)];
            const auto& p = rep.params[static_cast<std::size_t>(k)];
            std::printf("%s  psi=%.6f theta=%.6f delta=%.6f mu=%.6f\n", names[k], p.psi, p.theta,
                        p.delta, p.mu);
            for (int r = 0; r < 2; ++r) {
              std::printf("  [% .6f%+.6fi  % .6f%+.6fi]\n", v(r, 0).real(), v(r, 0).imag(),
                          v(r, 1).real(), v(r, 1).imag());
            }
          }
          return 0;
        }
      }
      if (pr_out.empty()) {
        std::cout << out.dump(2) << "\n";
      } else {
        write_json(pr_out, out);
        write_manifest_file(pr_out, *app.get_subcommands().front(), used_threads);
      }
    } else if (*oc) {
      const auto m = gbq::load_checkpoint(oc_ckpt);
      gbq::ControlProblem p;
      p.target = gbq::gate(oc_gate);
      p.model = &m;
      const auto r = gbq::optimize_control(p, cc);
      json w = {{"T", r.waveform.T}, {"M", r.waveform.M}};
      for (gbq::Axis a : m.config.control_axes) w[gbq::axis_name(a)] = r.waveform.axis(a);
      const json out = {{"gate", oc_gate},
                        {"fidelities",
                         {{"V_X", r.fidelities.vx},
                          {"V_Y", r.fidelities.vy},
                          {"V_Z", r.fidelities.vz},
                          {"U_c", r.fidelities.u}}},
                        {"objective", r.objective},
                        {"converged", r.converged},
                        {"best_restart", r.best_restart},
                        {"alpha", r.alpha},
                        {"pulses", {{"T", m.config.T}, {"M", m.config.M}, {"trains", gbq::to_json(r.pulses)}}},
                        {"waveform", w},
                        {"trace", r.trace}};
      write_json(oc_out, out);
      write_manifest_file(oc_out, *oc, used_threads);
      std::printf("%s  F(V_X,I)=%.6f  F(V_Y,I)=%.6f  F(V_Z,I)=%.6f  F(U_c,G)=%.6f%s\n",
                  oc_gate.c_str(), r.fidelities.vx, r.fidelities.vy, r.fidelities.vz,
                  r.fidelities.u, r.converged ? "" : "  (not converged)");
    } else if (*es) {
      const auto orders = parse_orders(es_orders);
      const auto mode = gbq::parse_inversion_mode(es_mode);
      gbq::CoherenceCurve curve;
      bool z_known = true;
      if (es_source == "model") {
        if (es_ckpt.empty()) usage("--source model needs --checkpoint");
        json meta;
        const auto m = gbq::load_checkpoint(es_ckpt, &meta);
        z_known = meta.contains("noise") && meta["noise"].value("z", false) &&
                  !meta["noise"].value("x", false);
        curve = gbq::predict_coherences(m, orders);
      } else if (es_source == "simulation") {
        curve = gbq::simulate_coherences(sim_config("z", 1.0, es_M, es_K), gbq::parse_shape(es_shape),
                                         orders, es_seed);
      } else if (es_source == "oracle") {
        curve = gbq::oracle_coherences(gbq::sample_psd(gbq::Axis::Z, gbq::psd_z, 1.0, es_M),
                                       gbq::parse_shape(es_shape), orders);
      } else {
        usage("unknown source '" + es_source + "' (expected model, simulation or oracle)");
      }
      const auto est = gbq::invert_as(curve, mode);
      std::string csv = "order,f,coherence,reference,chi,S_est,S_true\n";
      for (std::size_t i = 0; i < orders.size(); ++i) {
        csv += std::to_string(curve.orders[i]) + "," + fmt(est.frequency[i]) + "," +
               fmt(curve.coherence[i]) + "," + fmt(curve.reference[i]) + "," + fmt(est.chi[i]) +
               "," + fmt(est.value[i]) + "," + (z_known ? fmt(gbq::psd_z(est.frequency[i])) : "") +
               "\n";
      }
      write_text(es_out, csv);
      write_manifest_file(es_out, *es, used_threads);
      if (est.min_before_clip < 0.0) {
        std::fprintf(stderr, "note: negative estimate %.3g clipped to zero\n", est.min_before_clip);
      }
    } else if (*cs) {
      PulseFile pf{1.0, cs_M, {}};
      if (!cs_pulses.empty()) {
        pf = read_pulse_file(cs_pulses);
      } else {
        pf.seq = cpmg_sequence(cs_cpmg, cs_shape, cs_axis, pf.T, pf.M);
      }
      const auto cfg = sim_config(cs_noise, pf.T, pf.M, 1);
      const auto rows = gbq::convergence_study(cfg, gbq::discretize(pf.seq, pf.T, pf.M), cs_grid, cs_seed);
      std::string csv = "K,drift_X,drift_Y,drift_Z\n";
      for (const auto& r : rows) {
        csv += std::to_string(r.K);
        for (int o = 0; o < gbq::kNumObservables; ++o) {
          if (!r.drift) {
            csv += ",";
            continue;
          }
          double d = 0.0;
          for (int p = 0; p < gbq::kNumPreps; ++p) d = std::max(d, (*r.drift)[gbq::record_index(p, o)]);
          csv += "," + fmt(d);
        }
        csv += "\n";
      }
      write_text(cs_out, csv);
      write_manifest_file(cs_out, *cs, used_threads);
    }
  } catch (const gbq::Error& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    switch (gbq::classify(e.kind())) {
      case gbq::ErrorClass::Usage: return kExitUsage;
      case gbq::ErrorClass::Data: return kExitData;
      case gbq::ErrorClass::Numerical: return kExitNumerical;
    }
  } catch (const fs::filesystem_error& e) {
    std::fprintf(stderr, "error: IoError: %s\n", e.what());
    return kExitData;
  } catch (const json::exception& e) {
    std::fprintf(stderr, "error: DatasetSchemaError: %s\n", e.what());
    return kExitData;
  }
  return 0;
}
