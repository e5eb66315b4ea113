#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace gbq {

enum class ErrorKind {
  NonHermitianInput,
  NegativeFrequency,
  BadGridSize,
  PulsesOverlap,
  RandomizationFailed,
  UnknownDataset,
  ShapeMismatch,
  MuOutOfRange,
  NonPhysicalState,
  DatasetSchemaError,
  NonFiniteLoss,
  OrderOutOfRange,
  NonPositiveCoherence,
  Usage,
  Io,
};

std::string_view to_string(ErrorKind kind);

/// Coarse grouping used by the CLI to pick an exit code.
enum class ErrorClass { Usage, Data, Numerical };

ErrorClass classify(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace gbq
