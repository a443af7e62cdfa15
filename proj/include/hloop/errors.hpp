#pragma once

#include <stdexcept>
#include <string>

namespace hloop {

enum class ErrorKind {
  DegenerateSpeed,
  PointOnCurve,
  NonZeroMean,
  NonIntegrable,
  SignIncompatible,
  NotConverged,
  FieldTooLarge,
  NotContracting,
  MaxIterations,
  NoSignChange,
  StepTooLarge,
  InvalidArgument,
  Io,
};

inline const char* to_string(ErrorKind k) {
  switch (k) {
    case ErrorKind::DegenerateSpeed: return "DegenerateSpeed";
    case ErrorKind::PointOnCurve: return "PointOnCurve";
    case ErrorKind::NonZeroMean: return "NonZeroMean";
    case ErrorKind::NonIntegrable: return "NonIntegrable";
    case ErrorKind::SignIncompatible: return "SignIncompatible";
    case ErrorKind::NotConverged: return "NotConverged";
    case ErrorKind::FieldTooLarge: return "FieldTooLarge";
    case ErrorKind::NotContracting: return "NotContracting";
    case ErrorKind::MaxIterations: return "MaxIterations";
    case ErrorKind::NoSignChange: return "NoSignChange";
    case ErrorKind::StepTooLarge: return "StepTooLarge";
    case ErrorKind::InvalidArgument: return "InvalidArgument";
    case ErrorKind::Io: return "Io";
  }
  return "Unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Numerical failures map to exit code 1, input problems to exit code 2.
inline bool is_validation_error(ErrorKind k) {
  return k == ErrorKind::InvalidArgument || k == ErrorKind::Io || k == ErrorKind::NonZeroMean;
}

}  // namespace hloop
