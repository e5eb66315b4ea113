#pragma once

// Gate synthesis through a frozen graybox model: drive V_X, V_Y, V_Z to the
// identity and the control unitary to a target gate.

#include "gbq/graybox.hpp"
#include "gbq/trainer.hpp"

#include <span>
#include <string>
#include <vector>

namespace gbq {

/// I, X, Y, Z, H, RX45 (rotation by pi/4 about x).
Operator2 gate(const std::string& name);
std::vector<std::string> gate_names();

struct ControlWeights {
  double vx = 1.0, vy = 1.0, vz = 1.0, u = 1.0;
};

struct ControlProblem {
  Operator2 target = Operator2::Identity();
  const ModelState* model = nullptr;
  ControlWeights weights;
};

struct ControlConfig {
  int restarts = 8;
  int steps = 2000;
  AdamConfig adam{1e-2, 0.9, 0.999, 1e-8};
  std::uint64_t seed = 0;
  double tolerance = 1e-4;  // objective below this counts as converged
};

struct Fidelities {
  double vx = 0.0, vy = 0.0, vz = 0.0, u = 0.0;
};

/// Control variables: normalized (tau, A) for every pulse slot and control
/// axis, laid out as alpha[(n * axes + a) * 2 + {0, 1}]. Widths stay at the
/// nominal training value.
std::size_t control_dim(const ModelConfig& cfg);
FeatureSeq control_features(const ModelConfig& cfg, std::span<const double> alpha);
PulseSequence control_sequence(const ModelConfig& cfg, std::span<const double> alpha);
std::vector<double> nominal_alpha(const ModelConfig& cfg);

struct ControlEval {
  double objective = 0.0;
  Fidelities fidelities;
  std::vector<double> grad;  // empty unless requested
};

/// Batched objective sum_O w_O (F(V_O, I) - 1)^2 + w_u (F(U_c, G) - 1)^2.
std::vector<ControlEval> evaluate_control(const ControlProblem& p,
                                          const std::vector<std::vector<double>>& alphas,
                                          bool with_grad);
double control_objective(const ControlProblem& p, std::span<const double> alpha);

struct ControlResult {
  std::vector<double> alpha;
  FeatureSeq features;
  PulseSequence pulses;
  Waveform waveform;
  Fidelities fidelities;
  double objective = 0.0;
  std::vector<double> trace;  // objective per step of the winning restart
  int best_restart = 0;
  bool converged = false;
};

ControlResult optimize_control(const ControlProblem& p, const ControlConfig& cfg);

}  // namespace gbq
