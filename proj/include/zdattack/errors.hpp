#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace zda {

enum class ErrorCode {
  InvalidArgument,
  DimensionMismatch,
  DegenerateSystem,
  NotMinimal,
  NotStabilizable,
  NotDetectable,
  NotObservable,
  NotControllable,
  AmbiguousClassification,
  NoZeroDynamics,
  ImaginaryAxisEigenvalue,
  ConditionViolated,
  StepTooLarge,
  NotInRange,
  NotInRowSpace,
  ExtendedUnobservable,
  Infeasible,
  LeadingCoefficientNonpositive,
  IterationLimit,
  NumericalFailure,
  StiffStepViolation,
  InvariantViolation,
  Parse,
};

constexpr std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::InvalidArgument: return "InvalidArgument";
    case ErrorCode::DimensionMismatch: return "DimensionMismatch";
    case ErrorCode::DegenerateSystem: return "DegenerateSystem";
    case ErrorCode::NotMinimal: return "NotMinimal";
    case ErrorCode::NotStabilizable: return "NotStabilizable";
    case ErrorCode::NotDetectable: return "NotDetectable";
    case ErrorCode::NotObservable: return "NotObservable";
    case ErrorCode::NotControllable: return "NotControllable";
    case ErrorCode::AmbiguousClassification: return "AmbiguousClassification";
    case ErrorCode::NoZeroDynamics: return "NoZeroDynamics";
    case ErrorCode::ImaginaryAxisEigenvalue: return "ImaginaryAxisEigenvalue";
    case ErrorCode::ConditionViolated: return "ConditionViolated";
    case ErrorCode::StepTooLarge: return "StepTooLarge";
    case ErrorCode::NotInRange: return "NotInRange";
    case ErrorCode::NotInRowSpace: return "NotInRowSpace";
    case ErrorCode::ExtendedUnobservable: return "ExtendedUnobservable";
    case ErrorCode::Infeasible: return "Infeasible";
    case ErrorCode::LeadingCoefficientNonpositive: return "LeadingCoefficientNonpositive";
    case ErrorCode::IterationLimit: return "IterationLimit";
    case ErrorCode::NumericalFailure: return "NumericalFailure";
    case ErrorCode::StiffStepViolation: return "StiffStepViolation";
    case ErrorCode::InvariantViolation: return "InvariantViolation";
    case ErrorCode::Parse: return "Parse";
  }
  return "Unknown";
}

// Every failure raised by the library carries one of the codes above.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& what) { throw Error(code, what); }

inline void require(bool cond, ErrorCode code, const std::string& what) {
  if (!cond) fail(code, what);
}

}  // namespace zda
