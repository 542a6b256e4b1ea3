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

#include "explain/saliency.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace wssv::explain {

void OcclusionConfig::validate(int input_side) const {
  if (stride < 1) fail_field(ErrorCode::kConfiguration, "stride", "must be >= 1");
  if (stride > patch_side) fail_field(ErrorCode::kConfiguration, "stride", "must not exceed patch_side");
  if (patch_side > input_side) {
    fail_field(ErrorCode::kConfiguration, "patch_side",
               "patch " + std::to_string(patch_side) + " larger than input " + std::to_string(input_side));
  }
}

std::vector<int> OcclusionConfig::positions(int input_side) const {
  std::vector<int> out;
  for (int p = 0; p + patch_side <= input_side; p += stride) out.push_back(p);
  return out;
}

OcclusionConfig occlusion_config_from_json(const nlohmann::json& j) {
  OcclusionConfig cfg;
  if (j.is_null()) return cfg;
  if (!j.is_object()) fail(ErrorCode::kConfiguration, "occlusion config must be a JSON object");
  try {
    cfg.patch_side = j.value("patch_side", cfg.patch_side);
    cfg.stride = j.value("stride", cfg.stride);
    const auto fill = j.value("fill", std::string("mean_color"));
    if (fill == "mean_color") cfg.fill = OcclusionFill::kMeanColor;
    else if (fill == "gray_128") cfg.fill = OcclusionFill::kGray128;
    else fail_field(ErrorCode::kConfiguration, "fill", "expected mean_color or gray_128");
    if (j.value("target_class", std::string("wssv")) != "wssv") {
      fail_field(ErrorCode::kConfiguration, "target_class", "only wssv is supported");
    }
  } catch (const nlohmann::json::exception&) {
    fail(ErrorCode::kConfiguration, "occlusion config has a field of the wrong type");
  }
  return cfg;
}

nlohmann::json to_json(const SaliencyMap& map) {
  return {{"side", map.side}, {"baseline_score", map.baseline_score}, {"values", map.values}};
}

SaliencyMap occlusion_saliency(const ScoreFn& score, const imaging::ModelInput& input, const OcclusionConfig& cfg,
                               const imaging::Normalization& normalization) {
  const int side = input.side;
  cfg.validate(side);

  std::array<float, 3> fill{};
  if (cfg.fill == OcclusionFill::kGray128) {
    for (int c = 0; c < 3; ++c) {
      fill[c] = static_cast<float>(128.0 * normalization.scale[c] + normalization.offset[c]);
    }
  } else {
    std::array<double, 3> sum{};
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x)
        for (int c = 0; c < 3; ++c) sum[c] += input.at(x, y, c);
    for (int c = 0; c < 3; ++c) fill[c] = static_cast<float>(sum[c] / (static_cast<double>(side) * side));
  }

  SaliencyMap map;
  map.side = side;
  map.baseline_score = score(input);

  const auto pos = cfg.positions(side);
  std::vector<double> total(static_cast<std::size_t>(side) * side, 0.0);
  std::vector<int> cover(total.size(), 0);
  imaging::ModelInput work = input;
  for (int py : pos) {
    for (int px : pos) {
      for (int y = py; y < py + cfg.patch_side; ++y)
        for (int x = px; x < px + cfg.patch_side; ++x)
          for (int c = 0; c < 3; ++c) work.at(x, y, c) = fill[c];
      const double importance = std::max(0.0, map.baseline_score - score(work));
      for (int y = py; y < py + cfg.patch_side; ++y) {
        for (int x = px; x < px + cfg.patch_side; ++x) {
          const auto k = static_cast<std::size_t>(y) * side + x;
          total[k] += importance;
          cover[k] += 1;
          for (int c = 0; c < 3; ++c) work.at(x, y, c) = input.at(x, y, c);
        }
      }
    }
  }

  map.values.resize(total.size());
  for (std::size_t k = 0; k < total.size(); ++k) map.values[k] = cover[k] ? total[k] / cover[k] : 0.0;
  const auto [lo, hi] = std::minmax_element(map.values.begin(), map.values.end());
  const double min_v = *lo, range = *hi - *lo;
  for (auto& v : map.values) v = range > 0.0 ? std::clamp((v - min_v) / range, 0.0, 1.0) : 0.0;
  return map;
}

SaliencyMap occlusion_saliency(const inference::ModelHandle& handle, const imaging::ModelInput& input,
                               const OcclusionConfig& cfg) {
  if (input.side != handle.input_side()) {
    fail(ErrorCode::kInput, "input side does not match model input side");
  }
  return occlusion_saliency([&handle](const imaging::ModelInput& in) { return handle.predict(in).score; }, input,
                            cfg, handle.metadata().normalization);
}

imaging::ImageTensor render_overlay(const SaliencyMap& map, const imaging::ImageTensor& img) {
  img.validate();
  if (img.width != map.side || img.height != map.side) {
    fail(ErrorCode::kInput, "overlay image is " + std::to_string(img.width) + "x" + std::to_string(img.height) +
                                " but saliency map side is " + std::to_string(map.side));
  }
  imaging::ImageTensor out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double v = std::clamp(map.at(x, y), 0.0, 1.0);
      const double color[3] = {255.0 * v, 0.0, 255.0 * (1.0 - v)};
      for (int c = 0; c < 3; ++c) {
        const double blended = (1.0 - kOverlayAlpha) * img.at(x, y, c) + kOverlayAlpha * color[c];
        out.at(x, y, c) = static_cast<std::uint8_t>(std::clamp(std::lround(blended), 0L, 255L));
      }
    }
  }
  return out;
}

}  // namespace wssv::explain
