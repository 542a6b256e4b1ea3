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

#include <optional>
#include <string>
#include <string_view>

#include "common/time.hpp"

namespace wssv {

enum class Label { kHealthy, kWssv, kUnlabeled };
enum class Split { kTrain, kValidation, kTest, kUnassigned };
enum class SampleSource { kFieldReport, kWeb, kImport };

std::string_view to_string(Label v);
std::string_view to_string(Split v);
std::string_view to_string(SampleSource v);
Label parse_label(std::string_view text);
Split parse_split(std::string_view text);
SampleSource parse_source(std::string_view text);

// One dataset image, without pixel data.
struct ImageSample {
  std::string id;         // SHA-256 of the stored image bytes
  std::string image_ref;  // blob path relative to the blob root
  Label label = Label::kUnlabeled;
  Split split = Split::kUnassigned;
  SampleSource source = SampleSource::kImport;
  Timestamp captured_at{};
  std::optional<std::string> device_label;
  std::optional<std::string> augmentation_of;
  std::optional<int> fold;

  bool operator==(const ImageSample&) const = default;
};

}  // namespace wssv
