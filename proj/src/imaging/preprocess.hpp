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

#include <array>
#include <string>
#include <vector>

#include "imaging/image.hpp"

namespace wssv::imaging {

enum class ChannelLayout { kInterleaved, kPlanar };
enum class CropMode { kCenterSquare, kExplicitRoi };

std::string to_string(ChannelLayout layout);
ChannelLayout parse_channel_layout(const std::string& text);

struct Rect {
  int x = 0;
  int y = 0;
  int width = 0;
  int height = 0;
};

// value_out = value_in * scale + offset, per channel (RGB order).
struct Normalization {
  std::array<double, 3> scale{1.0 / 255.0, 1.0 / 255.0, 1.0 / 255.0};
  std::array<double, 3> offset{0.0, 0.0, 0.0};
};

struct PreprocessConfig {
  int target_side = 224;
  CropMode crop_mode = CropMode::kCenterSquare;
  Rect roi;  // used when crop_mode == kExplicitRoi
  Normalization normalization;
  ChannelLayout layout = ChannelLayout::kPlanar;

  void validate() const;
};

// Float tensor fed to a model: side x side x 3 in `layout` order.
struct ModelInput {
  int side = 0;
  ChannelLayout layout = ChannelLayout::kPlanar;
  std::vector<float> values;
  std::string provenance = "ad-hoc";

  std::size_t index(int x, int y, int c) const {
    return layout == ChannelLayout::kPlanar
               ? (static_cast<std::size_t>(c) * side + y) * side + x
               : (static_cast<std::size_t>(y) * side + x) * 3 + c;
  }
  float at(int x, int y, int c) const { return values[index(x, y, c)]; }
  float& at(int x, int y, int c) { return values[index(x, y, c)]; }
};

// The crop rectangle preprocess() will use. Throws kBounds / kInput.
Rect crop_rect(const ImageTensor& img, const PreprocessConfig& cfg);

// Square crop then bilinear resize (half-pixel centers), normalized.
ModelInput preprocess(const ImageTensor& img, const PreprocessConfig& cfg,
                      std::string provenance = "ad-hoc");

// Same geometry as preprocess() but kept as 8-bit pixels; used to render
// overlays in model-input coordinates.
ImageTensor crop_and_resize(const ImageTensor& img, const PreprocessConfig& cfg);

// Bilinear resize with half-pixel centers, edge-clamped. Returns
// interleaved floats in the 0..255 range.
std::vector<float> resize_bilinear(const ImageTensor& img, const Rect& src, int out_w, int out_h);

}  // namespace wssv::imaging
