#pragma once

// Exact complex 2x2 linear algebra for single-qubit operators.

#include <Eigen/Core>

#include <array>
#include <complex>

namespace gbq {

using cplx = std::complex<double>;
using Operator2 = Eigen::Matrix2cd;

enum class Axis { X, Y, Z, I };

Operator2 pauli(Axis axis);

/// Pauli coordinates of a Hermitian operator: H = a*I + b.sigma.
struct PauliCoords {
  double a = 0.0;
  std::array<double, 3> b{0.0, 0.0, 0.0};
};

PauliCoords pauli_coords(const Operator2& h);
Operator2 from_pauli_coords(const PauliCoords& c);

bool is_finite(const Operator2& m);
bool is_hermitian(const Operator2& m, double tol = 1e-9);
bool is_unitary(const Operator2& m, double tol = 1e-9);
bool is_traceless(const Operator2& m, double tol = 1e-9);

/// exp(-i (b.sigma) dt) for a traceless generator given by its Pauli vector.
/// This is the single kernel shared by the simulator and the differentiable
/// whitebox evolution.
Operator2 su2_step(double bx, double by, double bz, double dt);

/// exp(-i H dt) in closed form. Throws NonHermitianInput if H is not
/// Hermitian within 1e-9.
Operator2 expm_hermitian(const Operator2& h, double dt);

struct EigenDecomp2 {
  std::array<double, 2> values{};  // descending
  Operator2 vectors;               // columns; first nonzero entry real-positive
};

EigenDecomp2 eig_hermitian(const Operator2& a, double tol = 1e-9);

/// (1/d^2) |tr(U^dagger V)|^2 with d = 2.
double fidelity(const Operator2& u, const Operator2& v);

/// Frobenius norm of (a - b).
double distance(const Operator2& a, const Operator2& b);

}  // namespace gbq
