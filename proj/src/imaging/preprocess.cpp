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

#include "imaging/preprocess.hpp"

#include <algorithm>
#include <cmath>

#include "common/error.hpp"

namespace wssv::imaging {

std::string to_string(ChannelLayout layout) {
  return layout == ChannelLayout::kPlanar ? "planar" : "interleaved";
}

ChannelLayout parse_channel_layout(const std::string& text) {
  if (text == "planar") return ChannelLayout::kPlanar;
  if (text == "interleaved") return ChannelLayout::kInterleaved;
  fail_field(ErrorCode::kValidation, "channel_layout", "expected planar or interleaved, got '" + text + "'");
}

void PreprocessConfig::validate() const {
  if (target_side < 8) fail_field(ErrorCode::kValidation, "target_side", "must be >= 8");
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(normalization.scale[c]) || !std::isfinite(normalization.offset[c])) {
      fail_field(ErrorCode::kValidation, "normalization", "scale and offset must be finite");
    }
  }
}

Rect crop_rect(const ImageTensor& img, const PreprocessConfig& cfg) {
  img.validate();
  Rect r;
  if (cfg.crop_mode == CropMode::kCenterSquare) {
    const int side = std::min(img.width, img.height);
    r = {(img.width - side) / 2, (img.height - side) / 2, side, side};
  } else {
    r = cfg.roi;
    if (r.x < 0 || r.y < 0 || r.width < 1 || r.height < 1 ||
        static_cast<long>(r.x) + r.width > img.width || static_cast<long>(r.y) + r.height > img.height) {
      fail(ErrorCode::kBounds, "roi (" + std::to_string(r.x) + "," + std::to_string(r.y) + "," +
                                   std::to_string(r.width) + "," + std::to_string(r.height) +
                                   ") exceeds image " + std::to_string(img.width) + "x" +
                                   std::to_string(img.height));
    }
  }
  if (std::min(r.width, r.height) < 2) {
    fail(ErrorCode::kInput, "degenerate image: crop side < 2");
  }
  return r;
}

std::vector<float> resize_bilinear(const ImageTensor& img, const Rect& src, int out_w, int out_h) {
  std::vector<float> out(static_cast<std::size_t>(out_w) * out_h * 3);
  const double sx = static_cast<double>(src.width) / out_w;
  const double sy = static_cast<double>(src.height) / out_h;

  struct Tap {
    int i0, i1;
    float w1;
  };
  auto taps = [](int n_out, int n_src, double scale) {
    std::vector<Tap> t(n_out);
    for (int i = 0; i < n_out; ++i) {
      double s = (i + 0.5) * scale - 0.5;
      s = std::clamp(s, 0.0, static_cast<double>(n_src - 1));
      const int i0 = static_cast<int>(std::floor(s));
      const int i1 = std::min(i0 + 1, n_src - 1);
      t[i] = {i0, i1, static_cast<float>(s - i0)};
    }
    return t;
  };
  const auto xt = taps(out_w, src.width, sx);
  const auto yt = taps(out_h, src.height, sy);

  for (int y = 0; y < out_h; ++y) {
    const auto& ty = yt[y];
    for (int x = 0; x < out_w; ++x) {
      const auto& tx = xt[x];
      for (int c = 0; c < 3; ++c) {
        const float p00 = img.at(src.x + tx.i0, src.y + ty.i0, c);
        const float p01 = img.at(src.x + tx.i1, src.y + ty.i0, c);
        const float p10 = img.at(src.x + tx.i0, src.y + ty.i1, c);
        const float p11 = img.at(src.x + tx.i1, src.y + ty.i1, c);
        const float top = p00 + (p01 - p00) * tx.w1;
        const float bottom = p10 + (p11 - p10) * tx.w1;
        out[(static_cast<std::size_t>(y) * out_w + x) * 3 + c] = top + (bottom - top) * ty.w1;
      }
    }
  }
  return out;
}

ModelInput preprocess(const ImageTensor& img, const PreprocessConfig& cfg, std::string provenance) {
  cfg.validate();
  const Rect r = crop_rect(img, cfg);
  const int side = cfg.target_side;
  const auto rgb = resize_bilinear(img, r, side, side);

  ModelInput in;
  in.side = side;
  in.layout = cfg.layout;
  in.provenance = std::move(provenance);
  in.values.resize(rgb.size());
  for (int y = 0; y < side; ++y) {
    for (int x = 0; x < side; ++x) {
      for (int c = 0; c < 3; ++c) {
        const double v = rgb[(static_cast<std::size_t>(y) * side + x) * 3 + c];
        in.at(x, y, c) =
            static_cast<float>(v * cfg.normalization.scale[c] + cfg.normalization.offset[c]);
      }
    }
  }
  return in;
}

ImageTensor crop_and_resize(const ImageTensor& img, const PreprocessConfig& cfg) {
  cfg.validate();
  const Rect r = crop_rect(img, cfg);
  const auto rgb = resize_bilinear(img, r, cfg.target_side, cfg.target_side);
  ImageTensor out(cfg.target_side, cfg.target_side);
  for (std::size_t i = 0; i < rgb.size(); ++i) {
    out.pixels[i] = static_cast<std::uint8_t>(std::clamp(std::lround(rgb[i]), 0L, 255L));
  }
  return out;
}

}  // namespace wssv::imaging
