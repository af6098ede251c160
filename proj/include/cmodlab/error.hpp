#pragma once

#include <stdexcept>
#include <string>

namespace cmodlab {

enum class ErrKind {
  Parse,
  BadAugmentationForm,
  InconsistentStructure,
  NotInCategory,
  IllFormedMap,
  TorsionResidue,
  DependentResidues,
  NotRegularElement,
  NotRegularCase,
  NegativeLength,
  NegativeKernel,
  HypothesisUntagged,
  NotIndependent,
  PrecisionExhausted,
  Computation,
};

inline const char* err_name(ErrKind k) {
  switch (k) {
    case ErrKind::Parse: return "ParseError";
    case ErrKind::BadAugmentationForm: return "BadAugmentationForm";
    case ErrKind::InconsistentStructure: return "InconsistentStructure";
    case ErrKind::NotInCategory: return "NotInCategory";
    case ErrKind::IllFormedMap: return "IllFormedMap";
    case ErrKind::TorsionResidue: return "TorsionResidue";
    case ErrKind::DependentResidues: return "DependentResidues";
    case ErrKind::NotRegularElement: return "NotRegularElement";
    case ErrKind::NotRegularCase: return "NotRegularCase";
    case ErrKind::NegativeLength: return "NegativeLength";
    case ErrKind::NegativeKernel: return "NegativeKernel";
    case ErrKind::HypothesisUntagged: return "HypothesisUntagged";
    case ErrKind::NotIndependent: return "NotIndependent";
    case ErrKind::PrecisionExhausted: return "PrecisionExhausted";
    case ErrKind::Computation: return "ComputationError";
  }
  return "UnknownError";
}

class CmodError : public std::runtime_error {
 public:
  CmodError(ErrKind k, const std::string& msg)
      : std::runtime_error(std::string(err_name(k)) + ": " + msg), kind(k) {}
  ErrKind kind;
};

[[noreturn]] inline void fail(ErrKind k, const std::string& msg) {
  throw CmodError(k, msg);
}

inline void require(bool cond, ErrKind k, const std::string& msg) {
  if (!cond) fail(k, msg);
}

/// CLI exit code associated with each error class.
inline int exit_code(ErrKind k) {
  switch (k) {
    case ErrKind::Parse:
    case ErrKind::BadAugmentationForm:
      return 2;
    case ErrKind::NotInCategory:
      return 3;
    case ErrKind::PrecisionExhausted:
      return 6;
    default:
      return 4;
  }
}

}  // namespace cmodlab
