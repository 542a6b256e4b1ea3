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
#include <numeric>
#include <string>
#include <vector>

namespace wssv::inference {

enum class DType { kFloat, kInt64 };

using Shape = std::vector<std::int64_t>;

inline std::int64_t num_elements(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), std::int64_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape);

// Dense row-major tensor. Float tensors carry activations and weights; int64
// tensors only appear as shape/axes operands.
struct Tensor {
  DType dtype = DType::kFloat;
  Shape shape;
  std::vector<float> f;
  std::vector<std::int64_t> i;

  static Tensor floats(Shape shape, std::vector<float> data) {
    Tensor t;
    t.shape = std::move(shape);
    t.f = std::move(data);
    return t;
  }
  static Tensor zeros(Shape shape) {
    const auto n = static_cast<std::size_t>(num_elements(shape));
    return floats(std::move(shape), std::vector<float>(n, 0.0f));
  }
  static Tensor int64s(Shape shape, std::vector<std::int64_t> data) {
    Tensor t;
    t.dtype = DType::kInt64;
    t.shape = std::move(shape);
    t.i = std::move(data);
    return t;
  }

  std::int64_t size() const { return num_elements(shape); }
  std::size_t rank() const { return shape.size(); }
};

}  // namespace wssv::inference
