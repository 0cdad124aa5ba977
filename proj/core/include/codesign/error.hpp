#pragma once

#include <stdexcept>
#include <string>

namespace codesign {

enum class ErrorKind {
  invalid_instance,
  insufficient_data,
  dimension_mismatch,
  not_irreducible,
  solver_failure,
  degenerate_truncation,
  geometry_mismatch,
  optimization_failure,
  io,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace codesign
