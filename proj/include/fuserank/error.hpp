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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace fuserank {

// Values are shared with the C API (fr_status) and must stay stable.
enum class ErrorCode : int {
  kInvalidArgument = 1,
  kDimMismatch = 2,
  kFormat = 3,
  kChecksumMismatch = 4,
  kUnknownPartition = 5,
  kDuplicatePage = 6,
  kNotFound = 7,
  kInvalidQuery = 8,
  kInvalidQrel = 9,
  kUndefinedMetric = 10,
  kMissingRag = 11,
  kPartitionWithoutClassifier = 12,
  kNegativeRewriteCount = 13,
  kMalformedPath = 14,
  kTemplate = 15,
  kRetrievalUnavailable = 16,
  kComputation = 17,
  kIo = 18,
  kInternal = 19,
};

// Coarse grouping used for process exit codes.
enum class ErrorCategory { kInputFormat, kNotFound, kComputation };

std::string_view error_code_name(ErrorCode code) noexcept;
ErrorCategory error_category(ErrorCode code) noexcept;
std::string_view error_category_name(ErrorCategory category) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace fuserank
