#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace aldl {

enum class ErrorKind {
  domain,
  grid,
  gauge_violation,
  singular_field,
  spectrum,
  unphysical_mass,
  numerical_abort,
  config,
};

constexpr std::string_view to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::domain: return "domain";
    case ErrorKind::grid: return "grid";
    case ErrorKind::gauge_violation: return "gauge";
    case ErrorKind::singular_field: return "singular-field";
    case ErrorKind::spectrum: return "spectrum";
    case ErrorKind::unphysical_mass: return "unphysical-mass";
    case ErrorKind::numerical_abort: return "numerical";
    case ErrorKind::config: return "config";
  }
  return "unknown";
}

/// Single exception type for the library; `kind()` selects the failure class.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace aldl
