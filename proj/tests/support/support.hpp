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

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"

#include "common/error.hpp"
#include "eval/splits.hpp"
#include "imaging/image.hpp"
#include "imaging/preprocess.hpp"
#include "inference/engine.hpp"

namespace wssv::test {

std::filesystem::path fixture(const std::string& rel);
std::filesystem::path model_dir(const std::string& name);

// Frozen reference outputs: expected.json[model][key].
double expected_output(const std::string& model, const std::string& key);

// ((x*7 + y*13 + c*29 + variant*31) % 256) / 255, the fixture generator's input.
imaging::ModelInput pattern_input(int variant, imaging::ChannelLayout layout = imaging::ChannelLayout::kPlanar,
                                  int side = 224);
imaging::ModelInput constant_input(float value, imaging::ChannelLayout layout = imaging::ChannelLayout::kPlanar,
                                   int side = 224);

std::shared_ptr<inference::ModelHandle> load_fixture_model(const std::string& name);

// Small synthetic images with distinct content per seed.
imaging::ImageTensor noise_image(int w, int h, std::uint64_t seed);
std::vector<std::uint8_t> noise_png(int w, int h, std::uint64_t seed);

// ids h000.. (healthy) and w000.. (wssv).
eval::ClassLabels class_labels(std::size_t healthy = 411, std::size_t wssv = 38);

// Runs f and returns the wssv::Error it threw; code kOk when it did not throw.
template <typename F>
Error capture_error(F&& f) {
  try {
    f();
  } catch (const Error& e) {
    return e;
  }
  return Error(ErrorCode::kOk, "no error");
}

// Removed on destruction.
class TempDir {
 public:
  TempDir();
  ~TempDir();
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& rel) const { return path_ / rel; }

 private:
  std::filesystem::path path_;
};

}  // namespace wssv::test
