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

#include "imaging/augment.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/random.hpp"

namespace wssv::imaging {

void AugmentSpec::validate() const {
  if (!(rotation_degrees >= 0.0 && rotation_degrees < 360.0)) {
    fail_field(ErrorCode::kValidation, "rotation_degrees", "must be in [0, 360)");
  }
  if (!(brightness_delta >= -0.5 && brightness_delta <= 0.5)) {
    fail_field(ErrorCode::kValidation, "brightness_delta", "must be in [-0.5, 0.5]");
  }
  if (!(blur_sigma >= 0.0) || !std::isfinite(blur_sigma)) {
    fail_field(ErrorCode::kValidation, "blur_sigma", "must be a finite value >= 0");
  }
}

bool AugmentSpec::is_identity() const {
  return rotation_degrees == 0.0 && !flip_horizontal && !flip_vertical && brightness_delta == 0.0 &&
         blur_sigma == 0.0;
}

nlohmann::json to_json(const AugmentSpec& spec) {
  return {{"rotation_degrees", spec.rotation_degrees},
          {"flip_horizontal", spec.flip_horizontal},
          {"flip_vertical", spec.flip_vertical},
          {"brightness_delta", spec.brightness_delta},
          {"blur_sigma", spec.blur_sigma}};
}

AugmentSpec augment_spec_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "augment spec must be a JSON object");
  AugmentSpec s;
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "rotation_degrees") s.rotation_degrees = value.get<double>();
      else if (key == "flip_horizontal") s.flip_horizontal = value.get<bool>();
      else if (key == "flip_vertical") s.flip_vertical = value.get<bool>();
      else if (key == "brightness_delta") s.brightness_delta = value.get<double>();
      else if (key == "blur_sigma") s.blur_sigma = value.get<double>();
      else fail_field(ErrorCode::kValidation, key, "unknown augmentation field");
    } catch (const nlohmann::json::exception&) {
      fail_field(ErrorCode::kValidation, key, "wrong type");
    }
  }
  s.validate();
  return s;
}

AugmentSpec sample_augment_spec(const AugmentRanges& ranges, std::uint64_t seed) {
  SeededRng rng(seed);
  AugmentSpec s;
  const double rot = (rng.unit() * 2.0 - 1.0) * ranges.max_rotation_degrees;
  s.rotation_degrees = std::fmod(rot + 360.0, 360.0);
  if (s.rotation_degrees >= 360.0) s.rotation_degrees = 0.0;
  s.flip_horizontal = ranges.allow_flip_horizontal && (rng.next() & 1u);
  s.flip_vertical = ranges.allow_flip_vertical && (rng.next() & 1u);
  s.brightness_delta = std::clamp((rng.unit() * 2.0 - 1.0) * ranges.max_brightness_delta, -0.5, 0.5);
  s.blur_sigma = rng.unit() * std::max(0.0, ranges.max_blur_sigma);
  s.validate();
  return s;
}

namespace {

std::uint8_t to_byte(double v) {
  return static_cast<std::uint8_t>(std::clamp(std::lround(v), 0L, 255L));
}

// Bilinear sample with edge replication outside the image.
double sample_bilinear(const ImageTensor& img, double x, double y, int c) {
  x = std::clamp(x, 0.0, static_cast<double>(img.width - 1));
  y = std::clamp(y, 0.0, static_cast<double>(img.height - 1));
  const int x0 = static_cast<int>(std::floor(x));
  const int y0 = static_cast<int>(std::floor(y));
  const int x1 = std::min(x0 + 1, img.width - 1);
  const int y1 = std::min(y0 + 1, img.height - 1);
  const double fx = x - x0;
  const double fy = y - y0;
  const double top = img.at(x0, y0, c) * (1.0 - fx) + img.at(x1, y0, c) * fx;
  const double bottom = img.at(x0, y1, c) * (1.0 - fx) + img.at(x1, y1, c) * fx;
  return top * (1.0 - fy) + bottom * fy;
}

// Reflect-101 index: ... 2 1 | 0 1 2 ... n-1 | n-2 ...
int reflect_index(int i, int n) {
  if (n == 1) return 0;
  const int period = 2 * (n - 1);
  i %= period;
  if (i < 0) i += period;
  return i < n ? i : period - i;
}

// Positive angles turn content counter-clockwise as displayed (y grows
// downward, so the sampling rotation is mirrored).
ImageTensor rotate_general(const ImageTensor& img, double degrees) {
  const double theta = degrees * std::numbers::pi / 180.0;
  const double cs = std::cos(theta);
  const double sn = std::sin(theta);
  const double cx = (img.width - 1) / 2.0;
  const double cy = (img.height - 1) / 2.0;
  ImageTensor out(img.width, img.height);
  for (int y = 0; y < img.height; ++y) {
    for (int x = 0; x < img.width; ++x) {
      const double dx = x - cx;
      const double dy = y - cy;
      const double xs = cx + cs * dx - sn * dy;
      const double ys = cy + sn * dx + cs * dy;
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = to_byte(sample_bilinear(img, xs, ys, c));
    }
  }
  return out;
}

// Exact quarter turn for square images; same orientation as rotate_general.
ImageTensor rotate_quarter(const ImageTensor& img) {
  const int n = img.width;
  ImageTensor out(n, n);
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(n - 1 - y, x, c);
    }
  }
  return out;
}

}  // namespace

ImageTensor rotate(const ImageTensor& img, double degrees) {
  img.validate();
  if (degrees == 0.0) return img;
  if (degrees == 180.0) return flip_vertical(flip_horizontal(img));
  const bool square = img.width == img.height;
  if (square && degrees == 90.0) return rotate_quarter(img);
  if (square && degrees == 270.0) return rotate_quarter(rotate_quarter(rotate_quarter(img)));
  return rotate_general(img, degrees);
}

ImageTensor flip_horizontal(const ImageTensor& img) {
  ImageTensor out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(img.width - 1 - x, y, c);
  return out;
}

ImageTensor flip_vertical(const ImageTensor& img) {
  ImageTensor out(img.width, img.height);
  for (int y = 0; y < img.height; ++y)
    for (int x = 0; x < img.width; ++x)
      for (int c = 0; c < 3; ++c) out.at(x, y, c) = img.at(x, img.height - 1 - y, c);
  return out;
}

ImageTensor adjust_brightness(const ImageTensor& img, double delta) {
  if (delta == 0.0) return img;
  const double shift = delta * 255.0;
  ImageTensor out = img;
  for (auto& p : out.pixels) p = to_byte(p + shift);
  return out;
}

ImageTensor gaussian_blur(const ImageTensor& img, double sigma) {
  if (sigma == 0.0) return img;
  const int radius = std::max(1, static_cast<int>(std::ceil(3.0 * sigma)));
  std::vector<double> kernel(2 * radius + 1);
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    kernel[i + radius] = std::exp(-(i * i) / (2.0 * sigma * sigma));
    sum += kernel[i + radius];
  }
  for (auto& k : kernel) k /= sum;

  const int w = img.width;
  const int h = img.height;
  std::vector<double> tmp(static_cast<std::size_t>(w) * h * 3);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k) acc += kernel[k + radius] * img.at(reflect_index(x + k, w), y, c);
        tmp[(static_cast<std::size_t>(y) * w + x) * 3 + c] = acc;
      }
  ImageTensor out(w, h);
  for (int y = 0; y < h; ++y)
    for (int x = 0; x < w; ++x)
      for (int c = 0; c < 3; ++c) {
        double acc = 0.0;
        for (int k = -radius; k <= radius; ++k)
          acc += kernel[k + radius] * tmp[(static_cast<std::size_t>(reflect_index(y + k, h)) * w + x) * 3 + c];
        out.at(x, y, c) = to_byte(acc);
      }
  return out;
}

ImageTensor augment(const ImageTensor& img, const AugmentSpec& spec, std::uint64_t /*seed*/) {
  img.validate();
  spec.validate();
  ImageTensor out = rotate(img, spec.rotation_degrees);
  if (spec.flip_horizontal) out = flip_horizontal(out);
  if (spec.flip_vertical) out = flip_vertical(out);
  out = adjust_brightness(out, spec.brightness_delta);
  return gaussian_blur(out, spec.blur_sigma);
}

std::vector<LabeledImage> expand_training_set(const std::vector<LabeledImage>& samples,
                                              const std::vector<AugmentSpec>& specs,
                                              std::uint64_t seed) {
  for (const auto& s : samples) {
    if (s.record.split == Split::kValidation || s.record.split == Split::kTest) {
      fail(ErrorCode::kLeakage, "sample " + s.record.id + " is in the " +
                                    std::string(to_string(s.record.split)) +
                                    " split; only training samples may be augmented");
    }
    if (s.record.label == Label::kUnlabeled) {
      fail(ErrorCode::kValidation, "sample " + s.record.id + " has no label");
    }
  }
  for (const auto& spec : specs) spec.validate();

  std::vector<LabeledImage> out = samples;
  out.reserve(samples.size() * (1 + specs.size()));
  for (std::size_t i = 0; i < samples.size(); ++i) {
    for (std::size_t j = 0; j < specs.size(); ++j) {
      LabeledImage copy;
      copy.image = augment(samples[i].image, specs[j], seed + i * specs.size() + j);
      copy.encoded = encode_png(copy.image);
      copy.record = samples[i].record;
      copy.record.id = sha256_hex(copy.encoded);
      copy.record.image_ref.clear();
      copy.record.augmentation_of = samples[i].record.id;
      copy.record.fold.reset();
      out.push_back(std::move(copy));
    }
  }
  return out;
}

}  // namespace wssv::imaging
