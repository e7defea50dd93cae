#include "chafee/error.hpp"

namespace chafee {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidGrid: return "invalid-grid";
    case ErrorKind::Dimension: return "dimension";
    case ErrorKind::Truncation: return "truncation";
    case ErrorKind::Numerical: return "numerical";
    case ErrorKind::DegenerateInput: return "degenerate-input";
    case ErrorKind::Validation: return "validation";
    case ErrorKind::Parameter: return "parameter";
    case ErrorKind::SingularStep: return "singular-step";
    case ErrorKind::BlowUp: return "blow-up";
    case ErrorKind::DivergenceDomain: return "divergence-domain";
    case ErrorKind::Estimator: return "estimator";
    case ErrorKind::Fit: return "fit";
    case ErrorKind::Alignment: return "alignment";
    case ErrorKind::Scope: return "scope";
    case ErrorKind::DegenerateBundle: return "degenerate-bundle";
    case ErrorKind::Config: return "config";
    case ErrorKind::Io: return "io";
  }
  return "unknown";
}

}  // namespace chafee
