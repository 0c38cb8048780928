// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace rdsw {

enum class ErrorKind {
  invalid_argument,
  phase_space_mismatch,
  unsupported,
  budget_exceeded,
  overflow_guard,
  hypothesis_failed,
  insufficient_data,
  config,
};

const char* to_string(ErrorKind kind) noexcept;

/// Every refusal raised by the library carries a kind so the CLI can map it
/// to a structured diagnostic and exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require(bool cond, ErrorKind kind, const std::string& what) {
  if (!cond) fail(kind, what);
}

}  // namespace rdsw
