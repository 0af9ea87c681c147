// Copyright 2026 The fuserank Authors
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

#include "fuserank/error.hpp"

namespace fuserank {

std::string_view error_code_name(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid_argument";
    case ErrorCode::kDimMismatch: return "dim_mismatch";
    case ErrorCode::kFormat: return "format";
    case ErrorCode::kChecksumMismatch: return "checksum_mismatch";
    case ErrorCode::kUnknownPartition: return "unknown_partition";
    case ErrorCode::kDuplicatePage: return "duplicate_page";
    case ErrorCode::kNotFound: return "not_found";
    case ErrorCode::kInvalidQuery: return "invalid_query";
    case ErrorCode::kInvalidQrel: return "invalid_qrel";
    case ErrorCode::kUndefinedMetric: return "undefined_metric";
    case ErrorCode::kMissingRag: return "missing_rag";
    case ErrorCode::kPartitionWithoutClassifier: return "partition_without_classifier";
    case ErrorCode::kNegativeRewriteCount: return "negative_rewrite_count";
    case ErrorCode::kMalformedPath: return "malformed_path";
    case ErrorCode::kTemplate: return "template";
    case ErrorCode::kRetrievalUnavailable: return "retrieval_unavailable";
    case ErrorCode::kComputation: return "computation";
    case ErrorCode::kIo: return "io";
    case ErrorCode::kInternal: return "internal";
  }
  return "unknown";
}

ErrorCategory error_category(ErrorCode code) noexcept {
  switch (code) {
    case ErrorCode::kNotFound:
    case ErrorCode::kIo:
      return ErrorCategory::kNotFound;
    case ErrorCode::kUndefinedMetric:
    case ErrorCode::kRetrievalUnavailable:
    case ErrorCode::kComputation:
    case ErrorCode::kInternal:
      return ErrorCategory::kComputation;
    default:
      return ErrorCategory::kInputFormat;
  }
}

std::string_view error_category_name(ErrorCategory category) noexcept {
  switch (category) {
    case ErrorCategory::kInputFormat: return "input-format";
    case ErrorCategory::kNotFound: return "not-found";
    case ErrorCategory::kComputation: return "computation";
  }
  return "unknown";
}

}  // namespace fuserank
