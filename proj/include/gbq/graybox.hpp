#pragma once

// Graybox model: a GRU blackbox that emits V_O parameters and physics
// whitebox layers (Hamiltonian, time-ordered evolution, measurement).

#include "gbq/autodiff.hpp"
#include "gbq/dataset.hpp"

#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace gbq {

using FeatureSeq = std::vector<std::vector<double>>;

struct GRUParams {
  Eigen::MatrixXd W_r, U_r, b_r;
  Eigen::MatrixXd W_z, U_z, b_z;
  Eigen::MatrixXd W_h, U_h, b_h;

  static GRUParams zeros(Eigen::Index input, Eigen::Index hidden);
  Eigen::Index input() const { return W_r.cols(); }
  Eigen::Index hidden() const { return W_r.rows(); }
};

struct DenseParams {
  Eigen::MatrixXd W, b;

  static DenseParams zeros(Eigen::Index input, Eigen::Index output);
};

struct VOParams {
  double psi = 0.0;
  double theta = 0.0;
  double delta = 0.0;
  double mu = 1.0;
};

struct ModelConfig {
  int input_width = 3;
  int n_max = 28;
  int hidden_initial = 10;
  int hidden_final = 60;
  double omega = 10.0;
  double T = 1.0;
  std::size_t M = 4096;  // whitebox grid
  std::vector<Axis> control_axes{Axis::X};
  PulseShape shape = PulseShape::Gaussian;
  FeatureScale feature_scale;
};

ModelConfig model_config_for(const DatasetHeader& header);

struct ModelParams {
  GRUParams initial;
  std::array<GRUParams, 3> finals;
  std::array<DenseParams, 3> heads;

  std::vector<Eigen::MatrixXd*> tensors();
  std::vector<const Eigen::MatrixXd*> tensors() const;
  std::vector<std::string> names() const;
  std::size_t count() const;
  void set_zero();
  ModelParams zeros_like() const;
  bool all_finite() const;
};

ModelParams make_params(const ModelConfig& cfg);

/// Uniform in +/- sqrt(6 / (fan_in + fan_out)) for every weight, zero biases.
void glorot_init(ModelParams& p, std::uint64_t seed);

struct AdamState {
  ModelParams m, v;
  std::int64_t step = 0;
};

struct ModelState {
  ModelConfig config;
  ModelParams params;
  AdamState adam;
  std::uint64_t init_seed = 0;
};

ModelState make_model(const ModelConfig& cfg, std::uint64_t seed);

// Plain (untaped) primitives.

/// r, z gates, candidate state and the convex update for one batch of columns.
Eigen::MatrixXd gru_cell(const Eigen::MatrixXd& x, const Eigen::MatrixXd& h, const GRUParams& p);

/// Q D Q^dagger: traceless, Hermitian, eigenvalues +/- mu.
Operator2 vo_hermitian_part(const VOParams& p);
Operator2 vo_rotation(const VOParams& p);

/// O^-1 Q D Q^dagger. Throws MuOutOfRange if mu is outside [0, 1].
Operator2 construct_vo(const VOParams& p, Axis observable);

/// H_j = (Omega + f_z)/2 sigma_z + f_x/2 sigma_x + f_y/2 sigma_y.
std::vector<Operator2> whitebox_hamiltonian(const Waveform& w, double omega);

/// Control unitary on the waveform grid; same kernel as the simulator.
Operator2 control_unitary(const Waveform& w, double omega);

/// Re tr(V U rho U^dagger O). Throws NonPhysicalState for a rho that is not a
/// unit-trace positive semidefinite operator or a non-negligible imaginary part.
double measure(const Operator2& v, const Operator2& u, const Operator2& rho, const Operator2& o);

// Taped ops.

RealVar gru_cell(Tape& t, RealVar x, RealVar h, const GRUParams& p, GRUParams* g);
/// Runs the cell over the sequence from a zero state; returns every hidden state.
std::vector<RealVar> gru_sequence(Tape& t, const std::vector<RealVar>& xs, const GRUParams& p,
                                  GRUParams* g);
RealVar dense(Tape& t, RealVar x, const DenseParams& p, DenseParams* g);
/// Rows (psi, theta, delta) pass through, row 3 goes through a sigmoid.
RealVar head_activation(Tape& t, RealVar raw);

/// Three (4 x batch) VO parameter blocks, one per observable X, Y, Z.
std::array<RealVar, 3> blackbox_forward(Tape& t, const std::vector<RealVar>& features,
                                        const ModelParams& p, ModelParams* g);

CplxVar construct_vo(Tape& t, RealVar head, Axis observable);

/// fx, fy, fz are (M x batch); one unitary per column.
CplxVar whitebox_evolution(Tape& t, RealVar fx, RealVar fy, RealVar fz, double omega, double dt);

/// 18 x batch measurement block in record order.
RealVar measure_all(Tape& t, const std::array<CplxVar, 3>& vo, CplxVar u);

/// |tr(U^dagger G)|^2 / 4 per column, 1 x batch.
RealVar fidelity(Tape& t, CplxVar u, const Operator2& g);

RealVar model_forward(Tape& t, const std::vector<RealVar>& features, CplxVar u,
                      const ModelParams& p, ModelParams* g);

/// n_max matrices of shape (width x batch) from per-example feature sequences.
std::vector<Eigen::MatrixXd> pack_features(const std::vector<const FeatureSeq*>& batch,
                                           int n_max, int width);

VOParams head_to_vo(const Eigen::MatrixXd& head, Eigen::Index col);

struct VOReport {
  std::array<VOParams, 3> params;
  std::array<Operator2, 3> vo;
  Operator2 u_c;
  MeasurementRecord prediction{};
};

/// Untaped forward for one example.
VOReport extract_vo(const ModelState& m, const FeatureSeq& features, const Operator2& u_c);
MeasurementRecord predict(const ModelState& m, const FeatureSeq& features, const Operator2& u_c);

}  // namespace gbq
