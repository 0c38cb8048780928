// SPDX-License-Identifier: Apache-2.0
#include "rdsw/error.hpp"

namespace rdsw {

const char* to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::phase_space_mismatch: return "phase_space_mismatch";
    case ErrorKind::unsupported: return "unsupported";
    case ErrorKind::budget_exceeded: return "budget_exceeded";
    case ErrorKind::overflow_guard: return "overflow_guard";
    case ErrorKind::hypothesis_failed: return "hypothesis_failed";
    case ErrorKind::insufficient_data: return "insufficient_data";
    case ErrorKind::config: return "config";
  }
  return "?";
}

}  // namespace rdsw
