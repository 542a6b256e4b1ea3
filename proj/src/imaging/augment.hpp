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
#include <vector>

#include "json.hpp"

#include "common/sample.hpp"
#include "imaging/image.hpp"

namespace wssv::imaging {

// Label-preserving geometric and photometric transforms. There are no
// hue/saturation/channel-mixing fields: every channel receives the same
// affine-plus-resampling map.
struct AugmentSpec {
  double rotation_degrees = 0.0;  // [0, 360), counter-clockwise
  bool flip_horizontal = false;
  bool flip_vertical = false;
  double brightness_delta = 0.0;  // [-0.5, 0.5], fraction of full scale
  double blur_sigma = 0.0;        // >= 0, pixels

  void validate() const;
  bool is_identity() const;
  bool operator==(const AugmentSpec&) const = default;
};

// Exactly the five fields; unknown keys are rejected.
nlohmann::json to_json(const AugmentSpec& spec);
AugmentSpec augment_spec_from_json(const nlohmann::json& j);

// Sampling ranges for drawing random specs.
struct AugmentRanges {
  double max_rotation_degrees = 30.0;
  bool allow_flip_horizontal = true;
  bool allow_flip_vertical = true;
  double max_brightness_delta = 0.15;
  double max_blur_sigma = 1.0;
};

AugmentSpec sample_augment_spec(const AugmentRanges& ranges, std::uint64_t seed);

// Order of application: rotation, flips, brightness, blur. Output has the
// input's dimensions. The result depends only on `spec`; `seed` is part of
// the signature so callers record a full (spec, seed) provenance pair.
ImageTensor augment(const ImageTensor& img, const AugmentSpec& spec, std::uint64_t seed = 0);

// Individual transforms, exposed for tests.
ImageTensor rotate(const ImageTensor& img, double degrees);
ImageTensor flip_horizontal(const ImageTensor& img);
ImageTensor flip_vertical(const ImageTensor& img);
ImageTensor adjust_brightness(const ImageTensor& img, double delta);
ImageTensor gaussian_blur(const ImageTensor& img, double sigma);

struct LabeledImage {
  ImageSample record;
  ImageTensor image;
  std::vector<std::uint8_t> encoded;  // PNG bytes for augmented copies
};

// Returns the originals followed by one augmented copy per (sample, spec)
// pair. Copies inherit the label, split and source, carry augmentation_of,
// and are identified by the SHA-256 of their PNG encoding. Throws kLeakage
// for samples in the validation or test split.
std::vector<LabeledImage> expand_training_set(const std::vector<LabeledImage>& samples,
                                              const std::vector<AugmentSpec>& specs,
                                              std::uint64_t seed);

}  // namespace wssv::imaging
