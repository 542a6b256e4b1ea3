// Copyright 2026 The WSSV Surveillance Authors
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

#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace wssv {

// Error categories. Values are stable: they are the status codes of the C API.
enum class ErrorCode : int {
  kOk = 0,
  kInvalidArgument = 1,
  kDecode = 2,
  kBounds = 3,
  kInput = 4,
  kValidation = 5,
  kLeakage = 6,
  kIntegrity = 7,
  kConfiguration = 8,
  kCapability = 9,
  kNumeric = 10,
  kModelContract = 11,
  kStratification = 12,
  kUndefinedMetric = 13,
  kNotFound = 14,
  kConflict = 15,
  kReference = 16,
  kBusy = 17,
  kIo = 18,
  kBenchmark = 19,
  kInternal = 20,
};

std::string_view error_code_name(ErrorCode code) noexcept;

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}
  Error(ErrorCode code, const std::string& message, std::string field)
      : std::runtime_error(message), code_(code), field_(std::move(field)) {}

  ErrorCode code() const noexcept { return code_; }
  // Offending input field, when the error is attributable to one.
  const std::string& field() const noexcept { return field_; }

 private:
  ErrorCode code_;
  std::string field_;
};

[[noreturn]] inline void fail(ErrorCode code, const std::string& message) {
  throw Error(code, message);
}

[[noreturn]] inline void fail_field(ErrorCode code, const std::string& field,
                                    const std::string& message) {
  throw Error(code, field + ": " + message, field);
}

}  // namespace wssv
