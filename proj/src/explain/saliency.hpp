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

#include <functional>
#include <vector>

#include "json.hpp"

#include "imaging/image.hpp"
#include "imaging/preprocess.hpp"
#include "inference/engine.hpp"

namespace wssv::explain {

enum class OcclusionFill { kMeanColor, kGray128 };

struct OcclusionConfig {
  int patch_side = 16;
  int stride = 8;
  OcclusionFill fill = OcclusionFill::kMeanColor;

  // Throws kConfiguration unless 1 <= stride <= patch_side <= input_side.
  void validate(int input_side) const;
  // Top-left corners along one axis.
  std::vector<int> positions(int input_side) const;
};

OcclusionConfig occlusion_config_from_json(const nlohmann::json& j);

struct SaliencyMap {
  int side = 0;
  std::vector<double> values;  // row-major, each in [0, 1]
  double baseline_score = 0.0;

  double at(int x, int y) const { return values[static_cast<std::size_t>(y) * side + x]; }
};

nlohmann::json to_json(const SaliencyMap& map);

// Anything that maps a model input to a score in [0, 1].
using ScoreFn = std::function<double(const imaging::ModelInput&)>;

// Occlusion sensitivity. importance(patch) = max(0, baseline - occluded
// score); per-pixel importance is the mean over covering patches, then the
// grid is min-max normalized (all zero when constant). Evaluates exactly
// positions^2 + 1 inputs.
SaliencyMap occlusion_saliency(const ScoreFn& score, const imaging::ModelInput& input, const OcclusionConfig& cfg,
                               const imaging::Normalization& normalization);

SaliencyMap occlusion_saliency(const inference::ModelHandle& handle, const imaging::ModelInput& input,
                               const OcclusionConfig& cfg);

inline constexpr double kOverlayAlpha = 0.45;

// Blue (0) to red (1) colormap blended over `img` at kOverlayAlpha. `img`
// must be map.side x map.side (see imaging::crop_and_resize).
imaging::ImageTensor render_overlay(const SaliencyMap& map, const imaging::ImageTensor& img);

}  // namespace wssv::explain
