// SPDX-License-Identifier: Apache-2.0

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topoledger {

enum class ErrorCode {
  kMalformed,
  kDuplicateLabel,
  kDuplicateVertexId,
  kUnknownParent,
  kCycle,
  kDisconnected,
  kEmptyLabel,
  kDegenerateTree,
  kUnknownVertex,
  kUnknownConfig,
  kEmptyDataset,
  kNonFiniteLoss,
  kDimensionMismatch,
  kDuplicateKey,
  kUnknownText,
  kLengthMismatch,
  kTruthNotRanked,
  kTotalMismatch,
  kInvalidArgument,
  kIo,
};

std::string_view error_code_name(ErrorCode code);

// All library failures are reported as this exception. The message is
// prefixed with the module that raised it, e.g. "coa: duplicate label 'cash'".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, std::string_view module, const std::string& message)
      : std::runtime_error(std::string(module) + ": " + message), code_(code) {}

  ErrorCode code() const { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace topoledger
