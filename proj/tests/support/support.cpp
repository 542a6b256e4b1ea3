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

#include "support.hpp"

#include <cstdio>
#include <cstdlib>
#include <unistd.h>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/random.hpp"

namespace wssv::test {

namespace fs = std::filesystem;

fs::path fixture(const std::string& rel) { return fs::path(WSSV_FIXTURE_DIR) / rel; }

fs::path model_dir(const std::string& name) { return fixture("models") / name; }

double expected_output(const std::string& model, const std::string& key) {
  static const nlohmann::json doc = nlohmann::json::parse(read_text_file(fixture("expected.json")));
  return doc.at(model).at(key).get<double>();
}

imaging::ModelInput pattern_input(int variant, imaging::ChannelLayout layout, int side) {
  imaging::ModelInput in;
  in.side = side;
  in.layout = layout;
  in.values.resize(static_cast<std::size_t>(side) * side * 3);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        in.at(x, y, c) = static_cast<float>((x * 7 + y * 13 + c * 29 + variant * 31) % 256) / 255.0f;
  return in;
}

imaging::ModelInput constant_input(float value, imaging::ChannelLayout layout, int side) {
  imaging::ModelInput in;
  in.side = side;
  in.layout = layout;
  in.values.assign(static_cast<std::size_t>(side) * side * 3, value);
  return in;
}

std::shared_ptr<inference::ModelHandle> load_fixture_model(const std::string& name) {
  return inference::load_model(inference::read_bundle(model_dir(name)));
}

imaging::ImageTensor noise_image(int w, int h, std::uint64_t seed) {
  SeededRng rng(seed);
  imaging::ImageTensor img(w, h);
  for (auto& p : img.pixels) p = static_cast<std::uint8_t>(rng.below(256));
  return img;
}

std::vector<std::uint8_t> noise_png(int w, int h, std::uint64_t seed) {
  return imaging::encode_png(noise_image(w, h, seed));
}

eval::ClassLabels class_labels(std::size_t healthy, std::size_t wssv) {
  eval::ClassLabels labels;
  char buf[32];
  for (std::size_t i = 0; i < healthy; ++i) {
    std::snprintf(buf, sizeof(buf), "h%03zu", i);
    labels[buf] = "healthy";
  }
  for (std::size_t i = 0; i < wssv; ++i) {
    std::snprintf(buf, sizeof(buf), "w%03zu", i);
    labels[buf] = "wssv";
  }
  return labels;
}

TempDir::TempDir() {
  std::string tmpl = (fs::temp_directory_path() / "wssv-test-XXXXXX").string();
  if (!mkdtemp(tmpl.data())) fail(ErrorCode::kIo, "mkdtemp failed");
  path_ = tmpl;
}

TempDir::~TempDir() {
  std::error_code ec;
  fs::remove_all(path_, ec);
}

}  // namespace wssv::test
