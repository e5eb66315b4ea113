#include "gbq/linalg2.hpp"

#include "gbq/error.hpp"

#include <cmath>

namespace gbq {

namespace {

constexpr cplx kI{0.0, 1.0};

// Rotate v so that its first nonzero component is real and positive.
Eigen::Vector2cd fix_phase(Eigen::Vector2cd v) {
  for (int i = 0; i < 2; ++i) {
    const double mag = std::abs(v(i));
    if (mag > 1e-14) {
      v *= std::conj(v(i)) / mag;
      v(i) = cplx(std::real(v(i)), 0.0);
      break;
    }
  }
  return v;
}

}  // namespace

Operator2 pauli(Axis axis) {
  Operator2 m;
  switch (axis) {
    case Axis::X: m << 0.0, 1.0, 1.0, 0.0; break;
    case Axis::Y: m << 0.0, -kI, kI, 0.0; break;
    case Axis::Z: m << 1.0, 0.0, 0.0, -1.0; break;
    case Axis::I: m << 1.0, 0.0, 0.0, 1.0; break;
  }
  return m;
}

PauliCoords pauli_coords(const Operator2& h) {
  PauliCoords c;
  c.a = 0.5 * std::real(h(0, 0) + h(1, 1));
  c.b[2] = 0.5 * std::real(h(0, 0) - h(1, 1));
  c.b[0] = std::real(h(0, 1));
  c.b[1] = -std::imag(h(0, 1));
  return c;
}

Operator2 from_pauli_coords(const PauliCoords& c) {
  Operator2 m;
  m << c.a + c.b[2], cplx(c.b[0], -c.b[1]), cplx(c.b[0], c.b[1]), c.a - c.b[2];
  return m;
}

bool is_finite(const Operator2& m) {
  for (int i = 0; i < 4; ++i) {
    const cplx z = m(i % 2, i / 2);
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  }
  return true;
}

bool is_hermitian(const Operator2& m, double tol) {
  return (m - m.adjoint()).norm() <= tol;
}

bool is_unitary(const Operator2& m, double tol) {
  return (m.adjoint() * m - Operator2::Identity()).norm() <= tol;
}

bool is_traceless(const Operator2& m, double tol) { return std::abs(m.trace()) <= tol; }

Operator2 su2_step(double bx, double by, double bz, double dt) {
  const double r = std::sqrt(bx * bx + by * by + bz * bz);
  const double x = r * dt;
  const double c = std::cos(x);
  // g = sin(r dt) / r, continuous through r -> 0
  const double g = (x < 1e-6) ? dt * (1.0 - x * x / 6.0) : std::sin(x) / r;
  Operator2 u;
  u(0, 0) = cplx(c, -g * bz);
  u(1, 1) = cplx(c, g * bz);
  u(0, 1) = cplx(-g * by, -g * bx);
  u(1, 0) = cplx(g * by, -g * bx);
  return u;
}

Operator2 expm_hermitian(const Operator2& h, double dt) {
  if (!is_hermitian(h, 1e-9)) {
    throw Error(ErrorKind::NonHermitianInput, "expm_hermitian requires a Hermitian generator");
  }
  const PauliCoords c = pauli_coords(h);
  Operator2 u = su2_step(c.b[0], c.b[1], c.b[2], dt);
  if (c.a != 0.0) u *= std::exp(cplx(0.0, -c.a * dt));
  return u;
}

EigenDecomp2 eig_hermitian(const Operator2& a, double tol) {
  if (!is_hermitian(a, tol)) {
    throw Error(ErrorKind::NonHermitianInput, "eig_hermitian requires a Hermitian matrix");
  }
  const PauliCoords c = pauli_coords(a);
  const double r = std::hypot(c.b[0], c.b[1], c.b[2]);
  EigenDecomp2 out;
  out.values = {c.a + r, c.a - r};
  if (r <= 1e-14 * std::max(1.0, std::abs(c.a))) {
    out.values = {c.a, c.a};
    out.vectors = Operator2::Identity();
    return out;
  }
  const double nx = c.b[0] / r, ny = c.b[1] / r, nz = c.b[2] / r;
  Eigen::Vector2cd up;
  if (nz >= 0.0) {
    up << 1.0 + nz, cplx(nx, ny);
  } else {
    up << cplx(nx, -ny), 1.0 - nz;
  }
  up.normalize();
  Eigen::Vector2cd down;
  down << -std::conj(up(1)), std::conj(up(0));
  out.vectors.col(0) = fix_phase(up);
  out.vectors.col(1) = fix_phase(down);
  return out;
}

double fidelity(const Operator2& u, const Operator2& v) {
  // Unitarity is not enforced; the overlap is evaluated as written.
  return std::norm((u.adjoint() * v).trace()) / 4.0;
}

double distance(const Operator2& a, const Operator2& b) { return (a - b).norm(); }

std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NonHermitianInput: return "NonHermitianInput";
    case ErrorKind::NegativeFrequency: return "NegativeFrequency";
    case ErrorKind::BadGridSize: return "BadGridSize";
    case ErrorKind::PulsesOverlap: return "PulsesOverlap";
    case ErrorKind::RandomizationFailed: return "RandomizationFailed";
    case ErrorKind::UnknownDataset: return "UnknownDataset";
    case ErrorKind::ShapeMismatch: return "ShapeMismatch";
    case ErrorKind::MuOutOfRange: return "MuOutOfRange";
    case ErrorKind::NonPhysicalState: return "NonPhysicalState";
    case ErrorKind::DatasetSchemaError: return "DatasetSchemaError";
    case ErrorKind::NonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::OrderOutOfRange: return "OrderOutOfRange";
    case ErrorKind::NonPositiveCoherence: return "NonPositiveCoherence";
    case ErrorKind::Usage: return "UsageError";
    case ErrorKind::Io: return "IoError";
  }
  return "Error";
}

ErrorClass classify(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::Usage:
    case ErrorKind::UnknownDataset:
      return ErrorClass::Usage;
    case ErrorKind::DatasetSchemaError:
    case ErrorKind::Io:
    case ErrorKind::PulsesOverlap:
    case ErrorKind::RandomizationFailed:
    case ErrorKind::BadGridSize:
    case ErrorKind::ShapeMismatch:
    case ErrorKind::OrderOutOfRange:
    case ErrorKind::NegativeFrequency:
      return ErrorClass::Data;
    default:
      return ErrorClass::Numerical;
  }
}

}  // namespace gbq
