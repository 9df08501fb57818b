// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace paoi {

enum class ErrorCode {
  kDomain = 1,
  kValidation,
  kConfig,
  kNumericalFailure,
  kNoRoot,
  kInvalidCurvature,
  kTooLarge,
  kInsufficientRecords,
  kRegimeViolated,
  kEmptyInput,
  kBudgetExceeded,
  kIo,
};

const char* error_code_name(ErrorCode code) noexcept;

// Every failure raised by the library carries one of the codes above so that
// the C layer can translate it without parsing messages.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace paoi
