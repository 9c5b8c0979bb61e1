// Copyright 2026 The fedaudit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef FEDAUDIT_ERROR_HPP_
#define FEDAUDIT_ERROR_HPP_

#include <stdexcept>
#include <string>
#include <string_view>

namespace fedaudit {

enum class ErrorCode {
  kInvalidArgument,
  kParameterInfeasible,
  kPrimeGenerationFailure,
  kPlaintextOutOfRange,
  kDepthExceeded,
  kLFunctionNotIntegral,
  kValueOutOfRange,
  kLevelOutOfRange,
  kDimensionMismatch,
  kNonFiniteLoss,
  kParseError,
  kUnknownLabel,
  kInsufficientSamples,
  kDegenerateData,
  kConfigError,
  kIoError,
};

inline std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kParameterInfeasible: return "parameter-infeasible";
    case ErrorCode::kPrimeGenerationFailure: return "prime-generation-failure";
    case ErrorCode::kPlaintextOutOfRange: return "plaintext-out-of-range";
    case ErrorCode::kDepthExceeded: return "depth-exceeded";
    case ErrorCode::kLFunctionNotIntegral: return "lfunction-not-integral";
    case ErrorCode::kValueOutOfRange: return "value-out-of-range";
    case ErrorCode::kLevelOutOfRange: return "level-out-of-range";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kNonFiniteLoss: return "non-finite-loss";
    case ErrorCode::kParseError: return "parse-error";
    case ErrorCode::kUnknownLabel: return "unknown-label";
    case ErrorCode::kInsufficientSamples: return "insufficient-samples";
    case ErrorCode::kDegenerateData: return "degenerate-data";
    case ErrorCode::kConfigError: return "config-error";
    case ErrorCode::kIoError: return "io-error";
  }
  return "unknown";
}

/// Exception carrying a machine-checkable error code. Every failure raised by
/// the library goes through this type.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(error_code_name(code)) + ": " + message),
        code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fedaudit

#endif  // FEDAUDIT_ERROR_HPP_
