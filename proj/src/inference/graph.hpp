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
#include <map>
#include <optional>
#include <span>
#include <string>
#include <unordered_map>
#include <vector>

#include "inference/tensor.hpp"

namespace wssv::inference {

struct Attribute {
  enum class Kind { kFloat, kInt, kString, kFloats, kInts, kTensor, kOther };
  Kind kind = Kind::kOther;
  float f = 0.0f;
  std::int64_t i = 0;
  std::string s;
  std::vector<float> floats;
  std::vector<std::int64_t> ints;
  std::optional<Tensor> t;
};

struct Node {
  std::string name;
  std::string op_type;
  std::vector<std::string> inputs;   // empty string = omitted optional input
  std::vector<std::string> outputs;
  std::map<std::string, Attribute> attributes;

  const Attribute* attr(const std::string& key) const;
  std::int64_t attr_int(const std::string& key, std::int64_t fallback) const;
  float attr_float(const std::string& key, float fallback) const;
  std::vector<std::int64_t> attr_ints(const std::string& key) const;
  std::string attr_string(const std::string& key, const std::string& fallback) const;
};

// Declared dimension; nullopt for symbolic/unknown.
using DeclaredShape = std::vector<std::optional<std::int64_t>>;

struct ValueInfo {
  std::string name;
  int elem_type = 0;  // onnx::TensorProto::DataType
  DeclaredShape dims;
};

// A decoded, validated single-input single-output inference graph.
class Graph {
 public:
  // Decodes a serialized ModelProto. Throws kConfiguration for malformed
  // blobs and kCapability for operators/features the interpreter lacks.
  static Graph parse(std::span<const std::uint8_t> blob);

  const ValueInfo& input() const { return input_; }
  const ValueInfo& output() const { return output_; }
  const std::vector<Node>& nodes() const { return nodes_; }
  std::int64_t opset() const { return opset_; }

  // Pure function of its argument; safe to call concurrently.
  Tensor run(const Tensor& input) const;

 private:
  ValueInfo input_;
  ValueInfo output_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, Tensor> initializers_;
  // last_use_[k] = names whose final consumer is node k.
  std::vector<std::vector<std::string>> last_use_;
  std::int64_t opset_ = 0;
};

bool is_supported_op(const std::string& op_type);
const std::vector<std::string>& supported_ops();

// Executes one node. Exposed for operator unit tests.
std::vector<Tensor> run_node(const Node& node, const std::vector<const Tensor*>& inputs);

}  // namespace wssv::inference
