#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace chafee {

enum class ErrorKind {
  InvalidGrid,
  Dimension,
  Truncation,
  Numerical,
  DegenerateInput,
  Validation,
  Parameter,
  SingularStep,
  BlowUp,
  DivergenceDomain,
  Estimator,
  Fit,
  Alignment,
  Scope,
  DegenerateBundle,
  Config,
  Io,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Library-wide exception. `step()` is set for failures inside a time loop.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& what, std::optional<std::int64_t> step = std::nullopt)
      : std::runtime_error(what), kind_(kind), step_(step) {}

  ErrorKind kind() const noexcept { return kind_; }
  std::optional<std::int64_t> step() const noexcept { return step_; }

private:
  ErrorKind kind_;
  std::optional<std::int64_t> step_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) { throw Error(kind, what); }

}  // namespace chafee
