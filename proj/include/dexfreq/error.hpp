// Copyright (C) 2026 The dexfreq Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef DEXFREQ_ERROR_HPP_
#define DEXFREQ_ERROR_HPP_

#include <cstddef>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>

namespace dexfreq {

enum class ErrorCode {
  // dexparse
  kBadMagic,
  kTruncatedFile,
  kTruncatedStream,
  kMalformedOffset,
  // corpus
  kMissingFile,
  kBadHeader,
  kDuplicateId,
  kUnknownLabel,
  kAllFilesFailed,
  kInvalidProfile,
  kInvalidCounts,
  kIoError,
  kSchemaMismatch,
  // shared shape / data errors
  kTooFewRows,
  kSingleClass,
  kDimMismatch,
  kLengthMismatch,
  kEmptyMatrix,
  // neural
  kShapeMismatch,
  kNonFiniteLoss,
  // cluster
  kKTooLarge,
  kSingleCluster,
  // config / usage
  kInvalidArgument,
};

std::string_view error_code_name(ErrorCode code);

// Exception type thrown by every dexfreq operation. Parser errors carry the
// byte offset at which the problem was detected.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message,
        std::optional<std::size_t> offset = std::nullopt);

  ErrorCode code() const noexcept { return code_; }
  std::optional<std::size_t> offset() const noexcept { return offset_; }

 private:
  ErrorCode code_;
  std::optional<std::size_t> offset_;
};

// Structured diagnostic record for lenient operations that keep going.
struct Diagnostic {
  std::optional<std::size_t> offset;
  std::string message;
};

}  // namespace dexfreq

#endif  // DEXFREQ_ERROR_HPP_
