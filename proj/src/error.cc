// SPDX-License-Identifier: Apache-2.0

#include "topoledger/error.h"

namespace topoledger {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kMalformed: return "malformed";
    case ErrorCode::kDuplicateLabel: return "duplicate-label";
    case ErrorCode::kDuplicateVertexId: return "duplicate-vertex-id";
    case ErrorCode::kUnknownParent: return "unknown-parent";
    case ErrorCode::kCycle: return "cycle";
    case ErrorCode::kDisconnected: return "disconnected";
    case ErrorCode::kEmptyLabel: return "empty-label";
    case ErrorCode::kDegenerateTree: return "degenerate-tree";
    case ErrorCode::kUnknownVertex: return "unknown-vertex";
    case ErrorCode::kUnknownConfig: return "unknown-config";
    case ErrorCode::kEmptyDataset: return "empty-dataset";
    case ErrorCode::kNonFiniteLoss: return "non-finite-loss";
    case ErrorCode::kDimensionMismatch: return "dimension-mismatch";
    case ErrorCode::kDuplicateKey: return "duplicate-key";
    case ErrorCode::kUnknownText: return "unknown-text";
    case ErrorCode::kLengthMismatch: return "length-mismatch";
    case ErrorCode::kTruthNotRanked: return "truth-not-ranked";
    case ErrorCode::kTotalMismatch: return "total-mismatch";
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

}  // namespace topoledger
