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

#include "common/sample.hpp"

#include "common/error.hpp"

namespace wssv {

std::string_view to_string(Label v) {
  switch (v) {
    case Label::kHealthy: return "healthy";
    case Label::kWssv: return "wssv";
    case Label::kUnlabeled: return "unlabeled";
  }
  return "unlabeled";
}

std::string_view to_string(Split v) {
  switch (v) {
    case Split::kTrain: return "train";
    case Split::kValidation: return "validation";
    case Split::kTest: return "test";
    case Split::kUnassigned: return "unassigned";
  }
  return "unassigned";
}

std::string_view to_string(SampleSource v) {
  switch (v) {
    case SampleSource::kFieldReport: return "field_report";
    case SampleSource::kWeb: return "web";
    case SampleSource::kImport: return "import";
  }
  return "import";
}

Label parse_label(std::string_view text) {
  if (text == "healthy") return Label::kHealthy;
  if (text == "wssv") return Label::kWssv;
  if (text == "unlabeled") return Label::kUnlabeled;
  fail_field(ErrorCode::kValidation, "label", "unknown label '" + std::string(text) + "'");
}

Split parse_split(std::string_view text) {
  if (text == "train") return Split::kTrain;
  if (text == "validation") return Split::kValidation;
  if (text == "test") return Split::kTest;
  if (text == "unassigned") return Split::kUnassigned;
  fail_field(ErrorCode::kValidation, "split", "unknown split '" + std::string(text) + "'");
}

SampleSource parse_source(std::string_view text) {
  if (text == "field_report") return SampleSource::kFieldReport;
  if (text == "web") return SampleSource::kWeb;
  if (text == "import") return SampleSource::kImport;
  fail_field(ErrorCode::kValidation, "source", "unknown source '" + std::string(text) + "'");
}

}  // namespace wssv
