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

#include "dexfreq/error.hpp"

namespace dexfreq {

std::string_view error_code_name(ErrorCode code) {
  switch (code) {
    case ErrorCode::kBadMagic: return "BadMagic";
    case ErrorCode::kTruncatedFile: return "TruncatedFile";
    case ErrorCode::kTruncatedStream: return "TruncatedStream";
    case ErrorCode::kMalformedOffset: return "MalformedOffset";
    case ErrorCode::kMissingFile: return "MissingFile";
    case ErrorCode::kBadHeader: return "BadHeader";
    case ErrorCode::kDuplicateId: return "DuplicateId";
    case ErrorCode::kUnknownLabel: return "UnknownLabel";
    case ErrorCode::kAllFilesFailed: return "AllFilesFailed";
    case ErrorCode::kInvalidProfile: return "InvalidProfile";
    case ErrorCode::kInvalidCounts: return "InvalidCounts";
    case ErrorCode::kIoError: return "IoError";
    case ErrorCode::kSchemaMismatch: return "SchemaMismatch";
    case ErrorCode::kTooFewRows: return "TooFewRows";
    case ErrorCode::kSingleClass: return "SingleClass";
    case ErrorCode::kDimMismatch: return "DimMismatch";
    case ErrorCode::kLengthMismatch: return "LengthMismatch";
    case ErrorCode::kEmptyMatrix: return "EmptyMatrix";
    case ErrorCode::kShapeMismatch: return "ShapeMismatch";
    case ErrorCode::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorCode::kKTooLarge: return "KTooLarge";
    case ErrorCode::kSingleCluster: return "SingleCluster";
    case ErrorCode::kInvalidArgument: return "InvalidArgument";
  }
  return "Unknown";
}

namespace {

std::string format_message(ErrorCode code, const std::string& message,
                           std::optional<std::size_t> offset) {
  std::string out{error_code_name(code)};
  if (offset) out += " at offset " + std::to_string(*offset);
  out += ": ";
  out += message;
  return out;
}

}  // namespace

Error::Error(ErrorCode code, const std::string& message,
             std::optional<std::size_t> offset)
    : std::runtime_error(format_message(code, message, offset)),
      code_(code),
      offset_(offset) {}

}  // namespace dexfreq
