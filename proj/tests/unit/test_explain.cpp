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

#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "support.hpp"

#include "explain/saliency.hpp"

using namespace wssv;
using namespace wssv::explain;
using wssv::test::capture_error;

namespace {

imaging::ModelInput bright_top_left(int extent) {
  auto in = test::constant_input(0.0f);
  for (int c = 0; c < 3; ++c)
    for (int y = 0; y < extent; ++y)
      for (int x = 0; x < extent; ++x) in.at(x, y, c) = 1.0f;
  return in;
}

// Independent reimplementation: every patch scored on its own copy.
struct BruteForce {
  std::vector<double> map;
  std::vector<std::pair<int, int>> patches;
  std::vector<double> drops;
};

BruteForce brute_force(const inference::ModelHandle& h, const imaging::ModelInput& input, const OcclusionConfig& cfg) {
  const int side = input.side;
  double mean[3] = {0, 0, 0};
  for (int c = 0; c < 3; ++c) {
    for (int y = 0; y < side; ++y)
      for (int x = 0; x < side; ++x) mean[c] += input.at(x, y, c);
    mean[c] /= static_cast<double>(side) * side;
  }
  const double base = h.predict(input).score;
  BruteForce out;
  std::vector<double> sum(static_cast<std::size_t>(side) * side, 0.0);
  std::vector<int> n(sum.size(), 0);
  for (int py = 0; py + cfg.patch_side <= side; py += cfg.stride)
    for (int px = 0; px + cfg.patch_side <= side; px += cfg.stride) {
      auto occluded = input;
      for (int c = 0; c < 3; ++c)
        for (int y = py; y < py + cfg.patch_side; ++y)
          for (int x = px; x < px + cfg.patch_side; ++x) occluded.at(x, y, c) = static_cast<float>(mean[c]);
      const double drop = std::max(0.0, base - h.predict(occluded).score);
      out.patches.emplace_back(px, py);
      out.drops.push_back(drop);
      for (int y = py; y < py + cfg.patch_side; ++y)
        for (int x = px; x < px + cfg.patch_side; ++x) {
          sum[static_cast<std::size_t>(y) * side + x] += drop;
          n[static_cast<std::size_t>(y) * side + x] += 1;
        }
    }
  out.map.resize(sum.size());
  for (std::size_t k = 0; k < sum.size(); ++k) out.map[k] = n[k] ? sum[k] / n[k] : 0.0;
  const auto [lo, hi] = std::minmax_element(out.map.begin(), out.map.end());
  const double a = *lo, r = *hi - *lo;
  for (auto& v : out.map) v = r > 0 ? (v - a) / r : 0.0;
  return out;
}

}  // namespace

TEST_CASE("saliency: constant model gives an all-zero map") {
  const auto h = test::load_fixture_model("constant_zero");
  for (int v = 0; v < 3; ++v) {
    OcclusionConfig cfg;
    cfg.patch_side = 32;
    cfg.stride = 32;
    const auto m = occlusion_saliency(*h, test::pattern_input(v), cfg);
    CHECK(m.side == 224);
    CHECK(m.baseline_score == 0.5);
    CHECK(std::all_of(m.values.begin(), m.values.end(), [](double x) { return x == 0.0; }));
  }
}

TEST_CASE("saliency: patch-sensitive model matches brute force") {
  const auto h = test::load_fixture_model("patch_sensitive");
  for (const auto& input : {bright_top_left(32), test::pattern_input(1)}) {
    const OcclusionConfig cfg;  // 16 / 8
    const auto m = occlusion_saliency(*h, input, cfg);
    const auto bf = brute_force(*h, input, cfg);
    CHECK(m.baseline_score == h->predict(input).score);
    REQUIRE(m.values.size() == bf.map.size());
    double worst = 0.0;
    for (std::size_t k = 0; k < m.values.size(); ++k) worst = std::max(worst, std::abs(m.values[k] - bf.map[k]));
    CHECK(worst < 1e-9);
    for (double v : m.values) {
      CHECK(v >= 0.0);
      CHECK(v <= 1.0);
    }

    const auto arg = static_cast<int>(std::max_element(m.values.begin(), m.values.end()) - m.values.begin());
    CHECK(arg % 224 < 32);
    CHECK(arg / 224 < 32);

    // The patch with the largest drop covers the map peak and dominates the weakest patch.
    const auto best = std::max_element(bf.drops.begin(), bf.drops.end()) - bf.drops.begin();
    const auto [bx, by] = bf.patches[best];
    CHECK(bx < 32);
    CHECK(by < 32);
    CHECK(bf.drops[best] >= *std::min_element(bf.drops.begin(), bf.drops.end()));
  }
}

TEST_CASE("saliency: occluding the peak patch lowers the score the most") {
  const auto h = test::load_fixture_model("patch_sensitive");
  const auto input = bright_top_left(32);
  OcclusionConfig cfg;
  cfg.patch_side = 16;
  cfg.stride = 16;
  const auto m = occlusion_saliency(*h, input, cfg);
  const auto bf = brute_force(*h, input, cfg);
  std::size_t peak = 0, weak = 0;
  double hi = -1, lo = 2;
  for (std::size_t k = 0; k < bf.patches.size(); ++k) {
    const double v = m.at(bf.patches[k].first, bf.patches[k].second);
    if (v > hi) hi = v, peak = k;
    if (v < lo) lo = v, weak = k;
  }
  CHECK(bf.drops[peak] >= bf.drops[weak]);
  CHECK(bf.drops[peak] > 0.0);
}

TEST_CASE("saliency: forward passes = positions^2 + 1") {
  int calls = 0;
  const ScoreFn counting = [&](const imaging::ModelInput& in) {
    ++calls;
    return static_cast<double>(in.values[0]);
  };
  const auto input = test::pattern_input(0);
  OcclusionConfig cfg;
  cfg.patch_side = 16;
  cfg.stride = 16;
  occlusion_saliency(counting, input, cfg, imaging::Normalization{});
  CHECK(calls == 14 * 14 + 1);

  calls = 0;
  occlusion_saliency(counting, input, OcclusionConfig{}, imaging::Normalization{});
  CHECK(calls == 27 * 27 + 1);

  for (int patch : {8, 20, 50}) {
    for (int stride : {1, 7, patch}) {
      if (stride > patch) continue;
      cfg.patch_side = patch;
      cfg.stride = stride;
      const auto small = test::pattern_input(2, imaging::ChannelLayout::kPlanar, 64);
      calls = 0;
      occlusion_saliency(counting, small, cfg, imaging::Normalization{});
      const int per_axis = (64 - patch) / stride + 1;
      CHECK(calls == per_axis * per_axis + 1);
    }
  }
}

TEST_CASE("saliency: config errors") {
  const auto input = test::pattern_input(0, imaging::ChannelLayout::kPlanar, 32);
  const ScoreFn zero = [](const imaging::ModelInput&) { return 0.0; };
  OcclusionConfig cfg;
  cfg.patch_side = 40;
  cfg.stride = 8;
  CHECK(capture_error([&] { occlusion_saliency(zero, input, cfg, {}); }).code() == ErrorCode::kConfiguration);
  cfg.patch_side = 8;
  cfg.stride = 9;
  CHECK(capture_error([&] { occlusion_saliency(zero, input, cfg, {}); }).code() == ErrorCode::kConfiguration);
  cfg.stride = 0;
  CHECK(capture_error([&] { occlusion_saliency(zero, input, cfg, {}); }).code() == ErrorCode::kConfiguration);
  CHECK(capture_error([] { occlusion_config_from_json({{"fill", "purple"}}); }).field() == "fill");
  const auto parsed = occlusion_config_from_json({{"patch_side", 32}, {"stride", 16}, {"fill", "gray_128"}});
  CHECK(parsed.patch_side == 32);
  CHECK(parsed.fill == OcclusionFill::kGray128);
}

TEST_CASE("saliency: gray fill follows the model normalization") {
  std::vector<float> seen;
  const ScoreFn probe = [&](const imaging::ModelInput& in) {
    seen.push_back(in.at(0, 0, 1));
    return 0.0;
  };
  OcclusionConfig cfg;
  cfg.patch_side = 8;
  cfg.stride = 8;
  cfg.fill = OcclusionFill::kGray128;
  imaging::Normalization norm;
  norm.scale = {1.0 / 127.5, 1.0 / 127.5, 1.0 / 127.5};
  norm.offset = {-1.0, -1.0, -1.0};
  occlusion_saliency(probe, test::pattern_input(0, imaging::ChannelLayout::kPlanar, 16), cfg, norm);
  REQUIRE(seen.size() == 5);
  CHECK(seen[1] == doctest::Approx(128.0 / 127.5 - 1.0));
}

TEST_CASE("saliency json") {
  SaliencyMap m;
  m.side = 2;
  m.values = {0.0, 0.5, 1.0, 0.25};
  m.baseline_score = 0.8;
  const auto j = to_json(m);
  CHECK(j.at("side") == 2);
  CHECK(j.at("values").size() == 4);
  CHECK(j.at("values")[2] == 1.0);
}

TEST_CASE("overlay: colormap ends and single hot cell") {
  const imaging::ImageTensor gray(8, 8, 100);
  SaliencyMap m;
  m.side = 8;
  m.values.assign(64, 0.0);
  const auto blue = render_overlay(m, gray);
  CHECK(blue.width == 8);
  CHECK(blue.height == 8);
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) {
      CHECK(blue.at(x, y, 0) == 55);  // 0.55 * 100
      CHECK(blue.at(x, y, 2) == 170);  // 0.55 * 100 + 0.45 * 255
    }
  m.values.assign(64, 1.0);
  const auto red = render_overlay(m, gray);
  CHECK(red.at(3, 3, 0) == 170);
  CHECK(red.at(3, 3, 2) == 55);

  m.values.assign(64, 0.0);
  m.values[2 * 8 + 5] = 1.0;
  const auto hot = render_overlay(m, gray);
  int red_pixels = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 8; ++x) red_pixels += hot.at(x, y, 0) > hot.at(x, y, 2);
  CHECK(red_pixels == 1);
  CHECK(hot.at(5, 2, 0) > hot.at(5, 2, 2));

  CHECK(capture_error([&] { render_overlay(m, imaging::ImageTensor(9, 8)); }).code() == ErrorCode::kInput);
}
