#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace tcloak {

enum class ErrorKind {
  CloakedPoint,
  NotHyperbolic,
  CflViolation,
  SignalOutsideWindow,
  OracleDomainExceeded,
  VoidNearBoundary,
  CoverageExceeded,
  StencilTouchesVoid,
  StencilTouchesBoundary,
  PreconditionViolated,
  NoVoidCells,
  InsufficientLevels,
  ConfigError,
  IoError,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::CloakedPoint: return "CloakedPoint";
    case ErrorKind::NotHyperbolic: return "NotHyperbolic";
    case ErrorKind::CflViolation: return "CflViolation";
    case ErrorKind::SignalOutsideWindow: return "SignalOutsideWindow";
    case ErrorKind::OracleDomainExceeded: return "OracleDomainExceeded";
    case ErrorKind::VoidNearBoundary: return "VoidNearBoundary";
    case ErrorKind::CoverageExceeded: return "CoverageExceeded";
    case ErrorKind::StencilTouchesVoid: return "StencilTouchesVoid";
    case ErrorKind::StencilTouchesBoundary: return "StencilTouchesBoundary";
    case ErrorKind::PreconditionViolated: return "PreconditionViolated";
    case ErrorKind::NoVoidCells: return "NoVoidCells";
    case ErrorKind::InsufficientLevels: return "InsufficientLevels";
    case ErrorKind::ConfigError: return "ConfigError";
    case ErrorKind::IoError: return "IoError";
  }
  return "Unknown";
}

/// Single exception type for the library; `kind()` identifies the failure and
/// `stage()` is filled in by the experiment driver when an error crosses a
/// pipeline stage.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  Error(ErrorKind kind, const std::string& what, std::string stage)
      : std::runtime_error(std::string(to_string(kind)) + " [" + stage + "]: " + what),
        kind_(kind),
        stage_(std::move(stage)) {}

  ErrorKind kind() const noexcept { return kind_; }
  const std::string& stage() const noexcept { return stage_; }

 private:
  ErrorKind kind_;
  std::string stage_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what) {
  if (!condition) throw Error(kind, what);
}

}  // namespace tcloak
