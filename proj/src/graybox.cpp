#include "gbq/graybox.hpp"

#include "gbq/error.hpp"
#include "gbq/rng.hpp"
#include "gbq/simulator.hpp"

#include <cmath>

namespace gbq {

namespace {

using Eigen::MatrixXd;

const cplx kI(0.0, 1.0);

// Re sum(conj(g) .* x)
double re_inner(const Operator2& g, const Operator2& x) {
  return (g.conjugate().cwiseProduct(x)).sum().real();
}

MatrixXd sigmoid_of(const MatrixXd& a) {
  return a.unaryExpr([](double v) { return sigmoid(v); });
}

struct GruForward {
  MatrixXd r, z, rh, ht, out;
};

GruForward gru_forward(const MatrixXd& x, const MatrixXd& h, const GRUParams& p) {
  if (x.rows() != p.input() || h.rows() != p.hidden() || x.cols() != h.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "gru_cell: input or state shape does not match params");
  }
  GruForward f;
  f.r = sigmoid_of((p.W_r * x + p.U_r * h).colwise() + p.b_r.col(0));
  f.z = sigmoid_of((p.W_z * x + p.U_z * h).colwise() + p.b_z.col(0));
  f.rh = f.r.cwiseProduct(h);
  f.ht = ((p.W_h * x + p.U_h * f.rh).colwise() + p.b_h.col(0)).array().tanh().matrix();
  f.out = (f.z.array() * h.array() + (1.0 - f.z.array()) * f.ht.array()).matrix();
  return f;
}

Operator2 diag_phase(double a) {
  Operator2 d = Operator2::Zero();
  d(0, 0) = std::exp(kI * a);
  d(1, 1) = std::exp(-kI * a);
  return d;
}

Operator2 rotation(double theta) {
  Operator2 r;
  r << std::cos(theta), std::sin(theta), -std::sin(theta), std::cos(theta);
  return r;
}

Operator2 rotation_derivative(double theta) {
  Operator2 r;
  r << -std::sin(theta), std::cos(theta), -std::cos(theta), -std::sin(theta);
  return r;
}

void check_mu(double mu) {
  if (!(mu >= 0.0 && mu <= 1.0)) {
    throw Error(ErrorKind::MuOutOfRange, "mu must lie in [0, 1], got " + std::to_string(mu));
  }
}

const Axis kObservableAxes[3] = {Axis::X, Axis::Y, Axis::Z};

}  // namespace

GRUParams GRUParams::zeros(Eigen::Index input, Eigen::Index hidden) {
  GRUParams p;
  for (auto* w : {&p.W_r, &p.W_z, &p.W_h}) *w = MatrixXd::Zero(hidden, input);
  for (auto* u : {&p.U_r, &p.U_z, &p.U_h}) *u = MatrixXd::Zero(hidden, hidden);
  for (auto* b : {&p.b_r, &p.b_z, &p.b_h}) *b = MatrixXd::Zero(hidden, 1);
  return p;
}

DenseParams DenseParams::zeros(Eigen::Index input, Eigen::Index output) {
  return {MatrixXd::Zero(output, input), MatrixXd::Zero(output, 1)};
}

ModelConfig model_config_for(const DatasetHeader& header) {
  ModelConfig c;
  c.input_width = 3 * static_cast<int>(header.control_axes.size());
  c.n_max = header.n_max;
  c.omega = header.sim.omega;
  c.T = header.sim.T;
  c.M = header.sim.M;
  c.control_axes = header.control_axes;
  c.shape = header.shape;
  c.feature_scale = header.feature_scale;
  return c;
}

std::vector<MatrixXd*> ModelParams::tensors() {
  std::vector<MatrixXd*> out;
  auto gru = [&out](GRUParams& g) {
    for (auto* m : {&g.W_r, &g.U_r, &g.b_r, &g.W_z, &g.U_z, &g.b_z, &g.W_h, &g.U_h, &g.b_h}) {
      out.push_back(m);
    }
  };
  gru(initial);
  for (auto& f : finals) gru(f);
  for (auto& h : heads) {
    out.push_back(&h.W);
    out.push_back(&h.b);
  }
  return out;
}

std::vector<const MatrixXd*> ModelParams::tensors() const {
  auto mut = const_cast<ModelParams*>(this)->tensors();
  return {mut.begin(), mut.end()};
}

std::vector<std::string> ModelParams::names() const {
  std::vector<std::string> out;
  const char* gru[] = {"W_r", "U_r", "b_r", "W_z", "U_z", "b_z", "W_h", "U_h", "b_h"};
  for (const char* n : gru) out.push_back(std::string("initial.") + n);
  for (int k = 0; k < 3; ++k) {
    for (const char* n : gru) out.push_back("final" + std::to_string(k) + "." + n);
  }
  for (int k = 0; k < 3; ++k) {
    out.push_back("head" + std::to_string(k) + ".W");
    out.push_back("head" + std::to_string(k) + ".b");
  }
  return out;
}

std::size_t ModelParams::count() const {
  std::size_t n = 0;
  for (const auto* t : tensors()) n += static_cast<std::size_t>(t->size());
  return n;
}

void ModelParams::set_zero() {
  for (auto* t : tensors()) t->setZero();
}

ModelParams ModelParams::zeros_like() const {
  ModelParams z = *this;
  z.set_zero();
  return z;
}

bool ModelParams::all_finite() const {
  for (const auto* t : tensors()) {
    if (!t->allFinite()) return false;
  }
  return true;
}

ModelParams make_params(const ModelConfig& cfg) {
  ModelParams p;
  p.initial = GRUParams::zeros(cfg.input_width, cfg.hidden_initial);
  for (auto& f : p.finals) f = GRUParams::zeros(cfg.hidden_initial, cfg.hidden_final);
  for (auto& h : p.heads) h = DenseParams::zeros(cfg.hidden_final, 4);
  return p;
}

void glorot_init(ModelParams& p, std::uint64_t seed) {
  const auto names = p.names();
  const auto ts = p.tensors();
  for (std::size_t i = 0; i < ts.size(); ++i) {
    MatrixXd& m = *ts[i];
    const bool bias = names[i].find(".b") != std::string::npos;
    if (bias) {
      m.setZero();
      continue;
    }
    const double limit = std::sqrt(6.0 / static_cast<double>(m.rows() + m.cols()));
    CounterRng rng(derive_key({seed, static_cast<std::uint64_t>(Stream::Init), i}));
    for (Eigen::Index c = 0; c < m.cols(); ++c) {
      for (Eigen::Index r = 0; r < m.rows(); ++r) m(r, c) = rng.uniform(-limit, limit);
    }
  }
}

ModelState make_model(const ModelConfig& cfg, std::uint64_t seed) {
  ModelState s;
  s.config = cfg;
  s.params = make_params(cfg);
  glorot_init(s.params, seed);
  s.adam.m = s.params.zeros_like();
  s.adam.v = s.params.zeros_like();
  s.init_seed = seed;
  return s;
}

MatrixXd gru_cell(const MatrixXd& x, const MatrixXd& h, const GRUParams& p) {
  return gru_forward(x, h, p).out;
}

Operator2 vo_rotation(const VOParams& p) {
  return diag_phase(p.psi) * rotation(p.theta) * diag_phase(p.delta);
}

Operator2 vo_hermitian_part(const VOParams& p) {
  const Operator2 q = vo_rotation(p);
  return q * (p.mu * pauli(Axis::Z)) * q.adjoint();
}

Operator2 construct_vo(const VOParams& p, Axis observable) {
  check_mu(p.mu);
  return pauli(observable) * vo_hermitian_part(p);
}

std::vector<Operator2> whitebox_hamiltonian(const Waveform& w, double omega) {
  std::vector<Operator2> out(w.M);
  for (std::size_t j = 0; j < w.M; ++j) {
    out[j] = 0.5 * (omega + w.z[j]) * pauli(Axis::Z) + 0.5 * w.x[j] * pauli(Axis::X) +
             0.5 * w.y[j] * pauli(Axis::Y);
  }
  return out;
}

Operator2 control_unitary(const Waveform& w, double omega) {
  std::vector<double> bx(w.M), by(w.M), bz(w.M);
  for (std::size_t j = 0; j < w.M; ++j) {
    bx[j] = 0.5 * w.x[j];
    by[j] = 0.5 * w.y[j];
    bz[j] = 0.5 * (omega + w.z[j]);
  }
  return evolve_pauli(bx, by, bz, w.dt());
}

double measure(const Operator2& v, const Operator2& u, const Operator2& rho, const Operator2& o) {
  if (!is_hermitian(rho, 1e-9) || std::abs(rho.trace() - cplx(1.0, 0.0)) > 1e-9) {
    throw Error(ErrorKind::NonPhysicalState, "rho must be Hermitian with unit trace");
  }
  const auto e = eig_hermitian(rho);
  if (e.values[1] < -1e-9) throw Error(ErrorKind::NonPhysicalState, "rho is not positive");
  const cplx val = (v * u * rho * u.adjoint() * o).trace();
  if (std::abs(val.imag()) > 1e-9) {
    throw Error(ErrorKind::NonPhysicalState, "measurement has an imaginary residue");
  }
  return val.real();
}

RealVar gru_cell(Tape& t, RealVar xv, RealVar hv, const GRUParams& p, GRUParams* g) {
  GruForward f = gru_forward(t.value(xv), t.value(hv), p);
  RealVar y = t.leaf(f.out);
  f.out.resize(0, 0);
  t.on_backward([&t, xv, hv, y, &p, g, f = std::move(f)] {
    if (!t.has_grad(y)) return;
    const MatrixXd& x = t.value(xv);
    const MatrixXd& h = t.value(hv);
    const MatrixXd& G = t.grad(y);
    const auto z = f.z.array();
    const MatrixXd da_z = (G.array() * (h.array() - f.ht.array()) * z * (1.0 - z)).matrix();
    const MatrixXd da_h =
        (G.array() * (1.0 - z) * (1.0 - f.ht.array().square())).matrix();
    const MatrixXd drh = p.U_h.transpose() * da_h;
    const MatrixXd da_r = (drh.array() * h.array() * f.r.array() * (1.0 - f.r.array())).matrix();
    if (g) {
      g->W_r.noalias() += da_r * x.transpose();
      g->W_z.noalias() += da_z * x.transpose();
      g->W_h.noalias() += da_h * x.transpose();
      g->U_r.noalias() += da_r * h.transpose();
      g->U_z.noalias() += da_z * h.transpose();
      g->U_h.noalias() += da_h * f.rh.transpose();
      g->b_r += da_r.rowwise().sum();
      g->b_z += da_z.rowwise().sum();
      g->b_h += da_h.rowwise().sum();
    }
    MatrixXd& gh = t.grad(hv);
    gh.array() += G.array() * z + drh.array() * f.r.array();
    gh.noalias() += p.U_r.transpose() * da_r;
    gh.noalias() += p.U_z.transpose() * da_z;
    MatrixXd& gx = t.grad(xv);
    gx.noalias() += p.W_r.transpose() * da_r;
    gx.noalias() += p.W_z.transpose() * da_z;
    gx.noalias() += p.W_h.transpose() * da_h;
  });
  return y;
}

std::vector<RealVar> gru_sequence(Tape& t, const std::vector<RealVar>& xs, const GRUParams& p,
                                  GRUParams* g) {
  if (xs.empty()) throw Error(ErrorKind::ShapeMismatch, "gru_sequence: empty input sequence");
  RealVar h = t.leaf(MatrixXd::Zero(p.hidden(), t.value(xs.front()).cols()));
  std::vector<RealVar> out;
  out.reserve(xs.size());
  for (RealVar x : xs) {
    h = gru_cell(t, x, h, p, g);
    out.push_back(h);
  }
  return out;
}

RealVar dense(Tape& t, RealVar xv, const DenseParams& p, DenseParams* g) {
  const MatrixXd& x = t.value(xv);
  if (x.rows() != p.W.cols()) throw Error(ErrorKind::ShapeMismatch, "dense: input width");
  RealVar y = t.leaf((p.W * x).colwise() + p.b.col(0));
  t.on_backward([&t, xv, y, &p, g] {
    if (!t.has_grad(y)) return;
    const MatrixXd& G = t.grad(y);
    if (g) {
      g->W.noalias() += G * t.value(xv).transpose();
      g->b += G.rowwise().sum();
    }
    t.grad(xv).noalias() += p.W.transpose() * G;
  });
  return y;
}

RealVar head_activation(Tape& t, RealVar raw) {
  if (t.value(raw).rows() != 4) throw Error(ErrorKind::ShapeMismatch, "head must have 4 rows");
  MatrixXd v = t.value(raw);
  v.row(3) = sigmoid_of(v.row(3));
  RealVar y = t.leaf(std::move(v));
  t.on_backward([&t, raw, y] {
    if (!t.has_grad(y)) return;
    const MatrixXd& G = t.grad(y);
    MatrixXd& gr = t.grad(raw);
    gr.topRows(3) += G.topRows(3);
    const auto mu = t.value(y).row(3).array();
    gr.row(3).array() += G.row(3).array() * mu * (1.0 - mu);
  });
  return y;
}

std::array<RealVar, 3> blackbox_forward(Tape& t, const std::vector<RealVar>& features,
                                        const ModelParams& p, ModelParams* g) {
  const auto first = gru_sequence(t, features, p.initial, g ? &g->initial : nullptr);
  std::array<RealVar, 3> heads;
  for (int k = 0; k < 3; ++k) {
    const auto seq = gru_sequence(t, first, p.finals[k], g ? &g->finals[k] : nullptr);
    const RealVar raw = dense(t, seq.back(), p.heads[k], g ? &g->heads[k] : nullptr);
    heads[k] = head_activation(t, raw);
  }
  return heads;
}

VOParams head_to_vo(const MatrixXd& head, Eigen::Index col) {
  return {head(0, col), head(1, col), head(2, col), head(3, col)};
}

CplxVar construct_vo(Tape& t, RealVar head, Axis observable) {
  const MatrixXd& h = t.value(head);
  if (h.rows() != 4) throw Error(ErrorKind::ShapeMismatch, "construct_vo: head must have 4 rows");
  std::vector<Operator2> v(static_cast<std::size_t>(h.cols()));
  for (Eigen::Index c = 0; c < h.cols(); ++c) {
    v[static_cast<std::size_t>(c)] = construct_vo(head_to_vo(h, c), observable);
  }
  CplxVar y = t.leaf(std::move(v));
  t.on_backward([&t, head, y, observable] {
    if (!t.has_grad(y)) return;
    const Operator2 o = pauli(observable);
    const Operator2 sz = pauli(Axis::Z);
    const MatrixXd& h = t.value(head);
    MatrixXd& gh = t.grad(head);
    const auto& G = t.grad(y);
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const VOParams p = head_to_vo(h, c);
      const Operator2 gH = o * G[static_cast<std::size_t>(c)];
      const Operator2 q = vo_rotation(p);
      const Operator2 d = p.mu * sz;
      const Operator2 dq_psi = kI * sz * q;
      const Operator2 dq_theta = diag_phase(p.psi) * rotation_derivative(p.theta) *
                                 diag_phase(p.delta);
      const Operator2 dq_delta = q * (kI * sz);
      auto through_q = [&](const Operator2& dq) {
        const Operator2 dh = dq * d * q.adjoint() + q * d * dq.adjoint();
        return re_inner(gH, dh);
      };
      gh(0, c) += through_q(dq_psi);
      gh(1, c) += through_q(dq_theta);
      gh(2, c) += through_q(dq_delta);
      gh(3, c) += re_inner(gH, q * sz * q.adjoint());
    }
  });
  return y;
}

CplxVar whitebox_evolution(Tape& t, RealVar fx, RealVar fy, RealVar fz, double omega, double dt) {
  const MatrixXd& X = t.value(fx);
  const MatrixXd& Y = t.value(fy);
  const MatrixXd& Z = t.value(fz);
  if (X.rows() != Y.rows() || X.rows() != Z.rows() || X.cols() != Y.cols() ||
      X.cols() != Z.cols()) {
    throw Error(ErrorKind::ShapeMismatch, "whitebox_evolution: waveform shapes differ");
  }
  const Eigen::Index M = X.rows();
  const Eigen::Index B = X.cols();
  // prefix[c * M + j] = E_j ... E_0 for column c
  std::vector<Operator2> prefix(static_cast<std::size_t>(M * B));
  std::vector<Operator2> out(static_cast<std::size_t>(B));
  for (Eigen::Index c = 0; c < B; ++c) {
    Operator2 u = Operator2::Identity();
    for (Eigen::Index j = 0; j < M; ++j) {
      u = su2_step(0.5 * X(j, c), 0.5 * Y(j, c), 0.5 * (omega + Z(j, c)), dt) * u;
      prefix[static_cast<std::size_t>(c * M + j)] = u;
    }
    out[static_cast<std::size_t>(c)] = u;
  }
  CplxVar y = t.leaf(std::move(out));
  t.on_backward([&t, fx, fy, fz, y, omega, dt, M, B, prefix = std::move(prefix)] {
    if (!t.has_grad(y)) return;
    const MatrixXd& X = t.value(fx);
    const MatrixXd& Y = t.value(fy);
    const MatrixXd& Z = t.value(fz);
    MatrixXd& gx = t.grad(fx);
    MatrixXd& gy = t.grad(fy);
    MatrixXd& gz = t.grad(fz);
    const Operator2 nis[3] = {-kI * pauli(Axis::X), -kI * pauli(Axis::Y), -kI * pauli(Axis::Z)};
    for (Eigen::Index c = 0; c < B; ++c) {
      Operator2 s = t.grad(y)[static_cast<std::size_t>(c)];
      for (Eigen::Index j = M - 1; j >= 0; --j) {
        const double b[3] = {0.5 * X(j, c), 0.5 * Y(j, c), 0.5 * (omega + Z(j, c))};
        const Operator2 step = su2_step(b[0], b[1], b[2], dt);
        const Operator2 ge =
            j > 0 ? Operator2(s * prefix[static_cast<std::size_t>(c * M + j - 1)].adjoint()) : s;
        const double r = std::sqrt(b[0] * b[0] + b[1] * b[1] + b[2] * b[2]);
        const double x = r * dt;
        double g, gp_over_r;
        if (x < 1e-6) {
          g = dt * (1.0 - x * x / 6.0);
          gp_over_r = -dt * dt * dt / 3.0;
        } else {
          g = std::sin(x) / r;
          gp_over_r = (dt * r * std::cos(x) - std::sin(x)) / (r * r * r);
        }
        const double t_id = ge.trace().real();
        double tk[3], bt = 0.0;
        for (int k = 0; k < 3; ++k) {
          tk[k] = re_inner(ge, nis[k]);
          bt += b[k] * tk[k];
        }
        double gb[3];
        for (int k = 0; k < 3; ++k) gb[k] = -dt * g * b[k] * t_id + gp_over_r * b[k] * bt + g * tk[k];
        gx(j, c) += 0.5 * gb[0];
        gy(j, c) += 0.5 * gb[1];
        gz(j, c) += 0.5 * gb[2];
        s = step.adjoint() * s;
      }
    }
  });
  return y;
}

RealVar measure_all(Tape& t, const std::array<CplxVar, 3>& vo, CplxVar u) {
  const auto& U = t.value(u);
  const std::size_t B = U.size();
  for (const auto& v : vo) {
    if (t.value(v).size() != B) throw Error(ErrorKind::ShapeMismatch, "measure_all: batch sizes");
  }
  MatrixXd m(kNumMeasurements, static_cast<Eigen::Index>(B));
  for (std::size_t c = 0; c < B; ++c) {
    for (int p = 0; p < kNumPreps; ++p) {
      const Operator2 evolved = U[c] * initial_state(p) * U[c].adjoint();
      for (int o = 0; o < kNumObservables; ++o) {
        m(record_index(p, o), static_cast<Eigen::Index>(c)) =
            (t.value(vo[o])[c] * evolved * observable(o)).trace().real();
      }
    }
  }
  RealVar y = t.leaf(std::move(m));
  t.on_backward([&t, vo, u, y, B] {
    if (!t.has_grad(y)) return;
    const MatrixXd& G = t.grad(y);
    const auto& U = t.value(u);
    auto& gu = t.grad(u);
    std::array<std::vector<Operator2>*, 3> gv;
    for (int o = 0; o < 3; ++o) gv[o] = &t.grad(vo[o]);
    for (std::size_t c = 0; c < B; ++c) {
      for (int p = 0; p < kNumPreps; ++p) {
        const Operator2 urho = U[c] * initial_state(p);
        const Operator2 evolved = urho * U[c].adjoint();
        for (int o = 0; o < kNumObservables; ++o) {
          const double g = G(record_index(p, o), static_cast<Eigen::Index>(c));
          if (g == 0.0) continue;
          const Operator2 obs = observable(o);
          (*gv[o])[c] += g * (evolved * obs).adjoint();
          const Operator2 a = obs * t.value(vo[o])[c];
          gu[c] += g * (a + a.adjoint()) * urho;
        }
      }
    }
  });
  return y;
}

RealVar fidelity(Tape& t, CplxVar u, const Operator2& target) {
  const auto& U = t.value(u);
  MatrixXd f(1, static_cast<Eigen::Index>(U.size()));
  for (std::size_t c = 0; c < U.size(); ++c) f(0, static_cast<Eigen::Index>(c)) = fidelity(U[c], target);
  RealVar y = t.leaf(std::move(f));
  t.on_backward([&t, u, y, target] {
    if (!t.has_grad(y)) return;
    const auto& U = t.value(u);
    auto& gu = t.grad(u);
    for (std::size_t c = 0; c < U.size(); ++c) {
      const cplx tr = (U[c].adjoint() * target).trace();
      gu[c] += t.grad(y)(0, static_cast<Eigen::Index>(c)) * 0.5 * std::conj(tr) * target;
    }
  });
  return y;
}

RealVar model_forward(Tape& t, const std::vector<RealVar>& features, CplxVar u,
                      const ModelParams& p, ModelParams* g) {
  const auto heads = blackbox_forward(t, features, p, g);
  std::array<CplxVar, 3> vo;
  for (int k = 0; k < 3; ++k) vo[k] = construct_vo(t, heads[k], kObservableAxes[k]);
  return measure_all(t, vo, u);
}

std::vector<MatrixXd> pack_features(const std::vector<const FeatureSeq*>& batch, int n_max,
                                    int width) {
  std::vector<MatrixXd> out(static_cast<std::size_t>(n_max),
                            MatrixXd::Zero(width, static_cast<Eigen::Index>(batch.size())));
  for (std::size_t b = 0; b < batch.size(); ++b) {
    const FeatureSeq& f = *batch[b];
    if (f.size() != static_cast<std::size_t>(n_max)) {
      throw Error(ErrorKind::ShapeMismatch, "feature sequence length differs from n_max");
    }
    for (int n = 0; n < n_max; ++n) {
      if (f[n].size() != static_cast<std::size_t>(width)) {
        throw Error(ErrorKind::ShapeMismatch, "feature width differs from model input width");
      }
      for (int i = 0; i < width; ++i) out[n](i, static_cast<Eigen::Index>(b)) = f[n][i];
    }
  }
  return out;
}

VOReport extract_vo(const ModelState& m, const FeatureSeq& features, const Operator2& u_c) {
  Tape t;
  std::vector<RealVar> xs;
  for (auto& x : pack_features({&features}, m.config.n_max, m.config.input_width)) {
    xs.push_back(t.leaf(std::move(x)));
  }
  const auto heads = blackbox_forward(t, xs, m.params, nullptr);
  VOReport r;
  std::array<CplxVar, 3> vo;
  for (int k = 0; k < 3; ++k) {
    r.params[k] = head_to_vo(t.value(heads[k]), 0);
    vo[k] = construct_vo(t, heads[k], kObservableAxes[k]);
    r.vo[k] = t.value(vo[k])[0];
  }
  r.u_c = u_c;
  const RealVar meas = measure_all(t, vo, t.leaf(std::vector<Operator2>{u_c}));
  for (int i = 0; i < kNumMeasurements; ++i) r.prediction[i] = t.value(meas)(i, 0);
  return r;
}

MeasurementRecord predict(const ModelState& m, const FeatureSeq& features, const Operator2& u_c) {
  return extract_vo(m, features, u_c).prediction;
}

}  // namespace gbq
