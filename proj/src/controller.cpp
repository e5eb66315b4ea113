#include "gbq/controller.hpp"

#include "gbq/error.hpp"
#include "gbq/rng.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace gbq {

namespace {

const Axis kObservableAxes[3] = {Axis::X, Axis::Y, Axis::Z};

std::size_t axes_of(const ModelConfig& cfg) { return cfg.control_axes.size(); }

double nominal_amplitude(const ModelConfig& cfg) {
  const double sigma = nominal_sigma(cfg.T, cfg.M);
  return cfg.shape == PulseShape::Gaussian ? gaussian_pi_amplitude(sigma)
                                           : square_pi_amplitude(sigma);
}

}  // namespace

Operator2 gate(const std::string& name) {
  const cplx i(0.0, 1.0);
  if (name == "I") return Operator2::Identity();
  if (name == "X") return pauli(Axis::X);
  if (name == "Y") return pauli(Axis::Y);
  if (name == "Z") return pauli(Axis::Z);
  if (name == "H") return (pauli(Axis::X) + pauli(Axis::Z)) / std::sqrt(2.0);
  if (name == "RX45") {
    const double a = std::numbers::pi / 8.0;
    return std::cos(a) * Operator2::Identity() - i * std::sin(a) * pauli(Axis::X);
  }
  throw Error(ErrorKind::Usage, "unknown gate '" + name + "' (expected I, X, Y, Z, H, RX45)");
}

std::vector<std::string> gate_names() { return {"I", "X", "Y", "Z", "H", "RX45"}; }

std::size_t control_dim(const ModelConfig& cfg) {
  return static_cast<std::size_t>(cfg.n_max) * axes_of(cfg) * 2;
}

FeatureSeq control_features(const ModelConfig& cfg, std::span<const double> alpha) {
  if (alpha.size() != control_dim(cfg)) {
    throw Error(ErrorKind::ShapeMismatch, "control vector has the wrong length");
  }
  const std::size_t axes = axes_of(cfg);
  const double sigma = nominal_sigma(cfg.T, cfg.M) / cfg.feature_scale.T;
  FeatureSeq f(static_cast<std::size_t>(cfg.n_max), std::vector<double>(3 * axes));
  for (std::size_t n = 0; n < f.size(); ++n) {
    for (std::size_t a = 0; a < axes; ++a) {
      f[n][3 * a + 0] = alpha[(n * axes + a) * 2 + 0];
      f[n][3 * a + 1] = alpha[(n * axes + a) * 2 + 1];
      f[n][3 * a + 2] = sigma;
    }
  }
  return f;
}

PulseSequence control_sequence(const ModelConfig& cfg, std::span<const double> alpha) {
  const std::size_t axes = axes_of(cfg);
  const double sigma = nominal_sigma(cfg.T, cfg.M);
  PulseSequence seq;
  for (std::size_t a = 0; a < axes; ++a) {
    PulseTrain t;
    t.axis = cfg.control_axes[a];
    t.shape = cfg.shape;
    for (std::size_t n = 0; n < static_cast<std::size_t>(cfg.n_max); ++n) {
      t.pulses.push_back({alpha[(n * axes + a) * 2 + 0] * cfg.feature_scale.T,
                          alpha[(n * axes + a) * 2 + 1] * cfg.feature_scale.A_ref, sigma});
    }
    seq.push_back(std::move(t));
  }
  return seq;
}

std::vector<double> nominal_alpha(const ModelConfig& cfg) {
  const std::size_t axes = axes_of(cfg);
  std::vector<double> alpha(control_dim(cfg));
  const double amp = nominal_amplitude(cfg) / cfg.feature_scale.A_ref;
  for (std::size_t n = 0; n < static_cast<std::size_t>(cfg.n_max); ++n) {
    for (std::size_t a = 0; a < axes; ++a) {
      alpha[(n * axes + a) * 2 + 0] = (static_cast<double>(n) + 0.5) / cfg.n_max * cfg.T /
                                      cfg.feature_scale.T;
      alpha[(n * axes + a) * 2 + 1] = a == 0 ? amp : 0.0;
    }
  }
  return alpha;
}

std::vector<ControlEval> evaluate_control(const ControlProblem& p,
                                          const std::vector<std::vector<double>>& alphas,
                                          bool with_grad) {
  if (!p.model) throw Error(ErrorKind::Usage, "control problem has no model");
  if (!is_unitary(p.target, 1e-10)) throw Error(ErrorKind::Usage, "target gate is not unitary");
  const ModelConfig& cfg = p.model->config;
  const std::size_t B = alphas.size();
  const std::size_t axes = axes_of(cfg);
  const auto Mi = static_cast<Eigen::Index>(cfg.M);
  const auto Bi = static_cast<Eigen::Index>(B);

  std::vector<FeatureSeq> feats(B);
  std::vector<const FeatureSeq*> fptr(B);
  std::vector<PulseSequence> seqs(B);
  Eigen::MatrixXd fx = Eigen::MatrixXd::Zero(Mi, Bi), fy = fx, fz = fx;
  for (std::size_t b = 0; b < B; ++b) {
    feats[b] = control_features(cfg, alphas[b]);
    fptr[b] = &feats[b];
    seqs[b] = control_sequence(cfg, alphas[b]);
    const Waveform w = discretize(seqs[b], cfg.T, cfg.M);
    for (Eigen::Index j = 0; j < Mi; ++j) {
      fx(j, static_cast<Eigen::Index>(b)) = w.x[static_cast<std::size_t>(j)];
      fy(j, static_cast<Eigen::Index>(b)) = w.y[static_cast<std::size_t>(j)];
      fz(j, static_cast<Eigen::Index>(b)) = w.z[static_cast<std::size_t>(j)];
    }
  }

  Tape t;
  std::vector<RealVar> xs;
  for (auto& x : pack_features(fptr, cfg.n_max, cfg.input_width)) xs.push_back(t.leaf(std::move(x)));
  const auto heads = blackbox_forward(t, xs, p.model->params, nullptr);
  std::array<RealVar, 4> fid;
  for (int k = 0; k < 3; ++k) {
    fid[k] = fidelity(t, construct_vo(t, heads[k], kObservableAxes[k]), Operator2::Identity());
  }
  const RealVar wx = t.leaf(fx), wy = t.leaf(fy), wz = t.leaf(fz);
  fid[3] = fidelity(t, whitebox_evolution(t, wx, wy, wz, cfg.omega, cfg.T / cfg.M), p.target);
  const double w[4] = {p.weights.vx, p.weights.vy, p.weights.vz, p.weights.u};
  RealVar obj = affine(t, square(t, affine(t, fid[0], 1.0, -1.0)), w[0], 0.0);
  for (int k = 1; k < 4; ++k) {
    obj = add(t, obj, affine(t, square(t, affine(t, fid[k], 1.0, -1.0)), w[k], 0.0));
  }

  std::vector<ControlEval> out(B);
  for (std::size_t b = 0; b < B; ++b) {
    const auto c = static_cast<Eigen::Index>(b);
    out[b].objective = t.value(obj)(0, c);
    out[b].fidelities = {t.value(fid[0])(0, c), t.value(fid[1])(0, c), t.value(fid[2])(0, c),
                         t.value(fid[3])(0, c)};
  }
  if (!with_grad) return out;

  t.backward(obj);
  const Waveform probe(cfg.T, cfg.M);
  for (std::size_t b = 0; b < B; ++b) {
    const auto c = static_cast<Eigen::Index>(b);
    auto& g = out[b].grad;
    g.assign(control_dim(cfg), 0.0);
    for (std::size_t n = 0; n < static_cast<std::size_t>(cfg.n_max); ++n) {
      for (std::size_t a = 0; a < axes; ++a) {
        g[(n * axes + a) * 2 + 0] += t.grad(xs[n])(static_cast<Eigen::Index>(3 * a), c);
        g[(n * axes + a) * 2 + 1] += t.grad(xs[n])(static_cast<Eigen::Index>(3 * a + 1), c);
      }
    }
    for (std::size_t a = 0; a < axes; ++a) {
      const Axis ax = cfg.control_axes[a];
      const RealVar src = ax == Axis::X ? wx : ax == Axis::Y ? wy : wz;
      const Eigen::VectorXd col = t.grad(src).col(c);
      const std::vector<double> gf(col.data(), col.data() + col.size());
      const auto gp = waveform_vjp(seqs[b][a], probe, gf);
      for (std::size_t n = 0; n < gp.size(); ++n) {
        g[(n * axes + a) * 2 + 0] += gp[n].tau * cfg.feature_scale.T;
        g[(n * axes + a) * 2 + 1] += gp[n].amplitude * cfg.feature_scale.A_ref;
      }
    }
  }
  return out;
}

double control_objective(const ControlProblem& p, std::span<const double> alpha) {
  return evaluate_control(p, {std::vector<double>(alpha.begin(), alpha.end())}, false)[0].objective;
}

ControlResult optimize_control(const ControlProblem& p, const ControlConfig& cfg) {
  if (!p.model) throw Error(ErrorKind::Usage, "control problem has no model");
  if (cfg.restarts < 1 || cfg.steps < 0) throw Error(ErrorKind::Usage, "bad optimizer settings");
  const ModelConfig& mc = p.model->config;
  const std::size_t dim = control_dim(mc);
  const std::size_t R = static_cast<std::size_t>(cfg.restarts);

  // Restart 0 starts from the nominal train; the rest from seeded random
  // sorted positions and uniform amplitudes.
  std::vector<std::vector<double>> alpha(R);
  alpha[0] = nominal_alpha(mc);
  const std::size_t axes = mc.control_axes.size();
  for (std::size_t r = 1; r < R; ++r) {
    CounterRng rng(derive_key({cfg.seed, static_cast<std::uint64_t>(Stream::Control), r}));
    alpha[r].assign(dim, 0.0);
    for (std::size_t a = 0; a < axes; ++a) {
      std::vector<double> taus(static_cast<std::size_t>(mc.n_max));
      for (auto& v : taus) v = rng.uniform(0.02, 0.98);
      std::sort(taus.begin(), taus.end());
      for (std::size_t n = 0; n < taus.size(); ++n) {
        alpha[r][(n * axes + a) * 2 + 0] = taus[n];
        alpha[r][(n * axes + a) * 2 + 1] = rng.uniform(0.0, 1.0);
      }
    }
  }

  std::vector<std::vector<double>> m(R, std::vector<double>(dim, 0.0)), v = m;
  std::vector<std::vector<double>> traces(R);
  std::vector<std::vector<double>> best_alpha = alpha;
  std::vector<double> best_obj(R, std::numeric_limits<double>::infinity());
  const auto& ad = cfg.adam;
  for (int step = 0; step <= cfg.steps; ++step) {
    const bool last = step == cfg.steps;
    const auto evals = evaluate_control(p, alpha, !last);
    for (std::size_t r = 0; r < R; ++r) {
      traces[r].push_back(evals[r].objective);
      if (evals[r].objective < best_obj[r]) {
        best_obj[r] = evals[r].objective;
        best_alpha[r] = alpha[r];
      }
    }
    if (last) break;
    const double t = step + 1.0;
    const double c1 = 1.0 - std::pow(ad.beta1, t), c2 = 1.0 - std::pow(ad.beta2, t);
    for (std::size_t r = 0; r < R; ++r) {
      for (std::size_t i = 0; i < dim; ++i) {
        const double g = evals[r].grad[i];
        m[r][i] = ad.beta1 * m[r][i] + (1.0 - ad.beta1) * g;
        v[r][i] = ad.beta2 * v[r][i] + (1.0 - ad.beta2) * g * g;
        const double upd = ad.lr * (m[r][i] / c1) / (std::sqrt(v[r][i] / c2) + ad.eps);
        alpha[r][i] = std::clamp(alpha[r][i] - upd, 0.0, 1.0);
      }
    }
  }

  std::size_t best = 0;
  for (std::size_t r = 1; r < R; ++r) {
    if (best_obj[r] < best_obj[best]) best = r;
  }
  ControlResult res;
  res.best_restart = static_cast<int>(best);
  res.alpha = best_alpha[best];
  const auto final_eval = evaluate_control(p, {res.alpha}, false)[0];
  res.objective = final_eval.objective;
  res.fidelities = final_eval.fidelities;
  res.features = control_features(mc, res.alpha);
  res.pulses = control_sequence(mc, res.alpha);
  res.waveform = discretize(res.pulses, mc.T, mc.M);
  res.trace = std::move(traces[best]);
  res.converged = res.objective < cfg.tolerance;
  return res;
}

}  // namespace gbq
