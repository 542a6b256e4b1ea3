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
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace wssv::imaging {

// Row-major, interleaved RGB, 8 bits per channel.
struct ImageTensor {
  static constexpr int kChannels = 3;

  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  ImageTensor() = default;
  ImageTensor(int w, int h, std::uint8_t fill = 0);

  std::uint8_t& at(int x, int y, int c) {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }
  std::uint8_t at(int x, int y, int c) const {
    return pixels[(static_cast<std::size_t>(y) * width + x) * kChannels + c];
  }

  // Throws kInput when dimensions and buffer length disagree.
  void validate() const;

  bool operator==(const ImageTensor&) const = default;
};

// PNG or JPEG (sniffed from the magic bytes). Alpha is discarded, gray is
// expanded to RGB.
ImageTensor decode_image(std::span<const std::uint8_t> encoded);

std::vector<std::uint8_t> encode_png(const ImageTensor& img);

// Debug/test helper: JPEG at the given quality.
std::vector<std::uint8_t> encode_jpeg(const ImageTensor& img, int quality = 90);

// "png" or "jpg"; throws kDecode for anything else.
std::string sniff_extension(std::span<const std::uint8_t> encoded);

}  // namespace wssv::imaging
