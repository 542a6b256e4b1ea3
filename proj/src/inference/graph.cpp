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

#include "inference/graph.hpp"

#include <cstring>
#include <set>
#include <sstream>

#include "common/error.hpp"
#include "onnx.pb.h"

namespace wssv::inference {

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t k = 0; k < shape.size(); ++k) os << (k ? "," : "") << shape[k];
  os << ']';
  return os.str();
}

const Attribute* Node::attr(const std::string& key) const {
  auto it = attributes.find(key);
  return it == attributes.end() ? nullptr : &it->second;
}

std::int64_t Node::attr_int(const std::string& key, std::int64_t fallback) const {
  const auto* a = attr(key);
  return a && a->kind == Attribute::Kind::kInt ? a->i : fallback;
}

float Node::attr_float(const std::string& key, float fallback) const {
  const auto* a = attr(key);
  return a && a->kind == Attribute::Kind::kFloat ? a->f : fallback;
}

std::vector<std::int64_t> Node::attr_ints(const std::string& key) const {
  const auto* a = attr(key);
  return a && a->kind == Attribute::Kind::kInts ? a->ints : std::vector<std::int64_t>{};
}

std::string Node::attr_string(const std::string& key, const std::string& fallback) const {
  const auto* a = attr(key);
  return a && a->kind == Attribute::Kind::kString ? a->s : fallback;
}

namespace {

template <typename T>
std::vector<T> unpack_raw(const std::string& raw, std::int64_t count, const std::string& name) {
  if (raw.size() != static_cast<std::size_t>(count) * sizeof(T)) {
    fail(ErrorCode::kConfiguration, "initializer '" + name + "' raw_data length does not match its shape");
  }
  std::vector<T> out(static_cast<std::size_t>(count));
  std::memcpy(out.data(), raw.data(), raw.size());  // little-endian host assumed
  return out;
}

Tensor decode_tensor(const onnx::TensorProto& tp) {
  if (tp.data_location() == onnx::TensorProto::EXTERNAL) {
    fail(ErrorCode::kCapability, "tensor '" + tp.name() + "' uses external data, which is not supported");
  }
  Shape shape(tp.dims().begin(), tp.dims().end());
  const auto n = num_elements(shape);
  switch (tp.data_type()) {
    case onnx::TensorProto::FLOAT: {
      auto data = tp.has_raw_data() ? unpack_raw<float>(tp.raw_data(), n, tp.name())
                                    : std::vector<float>(tp.float_data().begin(), tp.float_data().end());
      if (static_cast<std::int64_t>(data.size()) != n) {
        fail(ErrorCode::kConfiguration, "tensor '" + tp.name() + "' has wrong element count");
      }
      return Tensor::floats(std::move(shape), std::move(data));
    }
    case onnx::TensorProto::DOUBLE: {
      auto d = tp.has_raw_data() ? unpack_raw<double>(tp.raw_data(), n, tp.name())
                                 : std::vector<double>(tp.double_data().begin(), tp.double_data().end());
      if (static_cast<std::int64_t>(d.size()) != n) {
        fail(ErrorCode::kConfiguration, "tensor '" + tp.name() + "' has wrong element count");
      }
      return Tensor::floats(std::move(shape), std::vector<float>(d.begin(), d.end()));
    }
    case onnx::TensorProto::INT64: {
      auto data = tp.has_raw_data() ? unpack_raw<std::int64_t>(tp.raw_data(), n, tp.name())
                                    : std::vector<std::int64_t>(tp.int64_data().begin(), tp.int64_data().end());
      if (static_cast<std::int64_t>(data.size()) != n) {
        fail(ErrorCode::kConfiguration, "tensor '" + tp.name() + "' has wrong element count");
      }
      return Tensor::int64s(std::move(shape), std::move(data));
    }
    case onnx::TensorProto::INT32: {
      std::vector<std::int64_t> data;
      if (tp.has_raw_data()) {
        auto raw = unpack_raw<std::int32_t>(tp.raw_data(), n, tp.name());
        data.assign(raw.begin(), raw.end());
      } else {
        data.assign(tp.int32_data().begin(), tp.int32_data().end());
      }
      if (static_cast<std::int64_t>(data.size()) != n) {
        fail(ErrorCode::kConfiguration, "tensor '" + tp.name() + "' has wrong element count");
      }
      return Tensor::int64s(std::move(shape), std::move(data));
    }
    default:
      fail(ErrorCode::kCapability, "tensor '" + tp.name() + "' has unsupported element type " +
                                       std::to_string(tp.data_type()));
  }
}

Attribute decode_attribute(const onnx::AttributeProto& ap) {
  Attribute a;
  switch (ap.type()) {
    case onnx::AttributeProto::FLOAT: a.kind = Attribute::Kind::kFloat; a.f = ap.f(); break;
    case onnx::AttributeProto::INT: a.kind = Attribute::Kind::kInt; a.i = ap.i(); break;
    case onnx::AttributeProto::STRING: a.kind = Attribute::Kind::kString; a.s = ap.s(); break;
    case onnx::AttributeProto::FLOATS:
      a.kind = Attribute::Kind::kFloats;
      a.floats.assign(ap.floats().begin(), ap.floats().end());
      break;
    case onnx::AttributeProto::INTS:
      a.kind = Attribute::Kind::kInts;
      a.ints.assign(ap.ints().begin(), ap.ints().end());
      break;
    case onnx::AttributeProto::TENSOR:
      a.kind = Attribute::Kind::kTensor;
      a.t = decode_tensor(ap.t());
      break;
    default: a.kind = Attribute::Kind::kOther; break;
  }
  return a;
}

ValueInfo decode_value_info(const onnx::ValueInfoProto& vi) {
  ValueInfo out;
  out.name = vi.name();
  if (vi.type().has_tensor_type()) {
    const auto& tt = vi.type().tensor_type();
    out.elem_type = tt.elem_type();
    for (const auto& d : tt.shape().dim()) {
      if (d.has_dim_value()) out.dims.emplace_back(d.dim_value());
      else out.dims.emplace_back(std::nullopt);
    }
  }
  return out;
}

}  // namespace

Graph Graph::parse(std::span<const std::uint8_t> blob) {
  onnx::ModelProto model;
  if (blob.empty() || !model.ParseFromArray(blob.data(), static_cast<int>(blob.size()))) {
    fail(ErrorCode::kConfiguration, "model blob is not a valid ONNX ModelProto");
  }
  Graph g;
  for (const auto& op : model.opset_import()) {
    if (op.domain().empty() || op.domain() == "ai.onnx") g.opset_ = op.version();
  }
  const auto& gp = model.graph();
  for (const auto& init : gp.initializer()) g.initializers_.emplace(init.name(), decode_tensor(init));

  std::vector<ValueInfo> real_inputs;
  for (const auto& in : gp.input()) {
    if (!g.initializers_.contains(in.name())) real_inputs.push_back(decode_value_info(in));
  }
  if (real_inputs.size() != 1) {
    fail(ErrorCode::kConfiguration,
         "model must have exactly one graph input, found " + std::to_string(real_inputs.size()));
  }
  if (gp.output_size() != 1) {
    fail(ErrorCode::kConfiguration,
         "model must have exactly one graph output, found " + std::to_string(gp.output_size()));
  }
  g.input_ = real_inputs.front();
  g.output_ = decode_value_info(gp.output(0));
  if (g.input_.elem_type != onnx::TensorProto::FLOAT) {
    fail(ErrorCode::kConfiguration, "graph input '" + g.input_.name + "' must be float32");
  }

  std::set<std::string> defined;
  defined.insert(g.input_.name);
  for (const auto& [name, _] : g.initializers_) defined.insert(name);
  for (const auto& np : gp.node()) {
    if (!np.domain().empty() && np.domain() != "ai.onnx") {
      fail(ErrorCode::kCapability, "unsupported operator " + np.domain() + "::" + np.op_type());
    }
    if (!is_supported_op(np.op_type())) {
      fail(ErrorCode::kCapability, "unsupported operator " + np.op_type() +
                                       (np.name().empty() ? "" : " (node '" + np.name() + "')"));
    }
    Node n;
    n.name = np.name();
    n.op_type = np.op_type();
    n.inputs.assign(np.input().begin(), np.input().end());
    n.outputs.assign(np.output().begin(), np.output().end());
    for (const auto& ap : np.attribute()) n.attributes.emplace(ap.name(), decode_attribute(ap));
    for (const auto& in : n.inputs) {
      if (!in.empty() && !defined.contains(in)) {
        fail(ErrorCode::kConfiguration, "node '" + n.name + "' (" + n.op_type + ") consumes undefined value '" +
                                            in + "'; nodes must be topologically sorted");
      }
    }
    for (const auto& out : n.outputs) defined.insert(out);
    g.nodes_.push_back(std::move(n));
  }
  if (!defined.contains(g.output_.name)) {
    fail(ErrorCode::kConfiguration, "graph output '" + g.output_.name + "' is never produced");
  }

  std::unordered_map<std::string, std::size_t> last;
  for (std::size_t k = 0; k < g.nodes_.size(); ++k)
    for (const auto& in : g.nodes_[k].inputs)
      if (!in.empty()) last[in] = k;
  g.last_use_.resize(g.nodes_.size());
  for (const auto& [name, k] : last) {
    if (name != g.output_.name && !g.initializers_.contains(name)) g.last_use_[k].push_back(name);
  }
  return g;
}

Tensor Graph::run(const Tensor& input) const {
  std::unordered_map<std::string, Tensor> values;
  values.emplace(input_.name, input);
  auto lookup = [&](const std::string& name) -> const Tensor* {
    if (name.empty()) return nullptr;
    if (auto it = values.find(name); it != values.end()) return &it->second;
    if (auto it = initializers_.find(name); it != initializers_.end()) return &it->second;
    fail(ErrorCode::kInternal, "value '" + name + "' not available");
  };
  for (std::size_t k = 0; k < nodes_.size(); ++k) {
    const Node& node = nodes_[k];
    std::vector<const Tensor*> args;
    args.reserve(node.inputs.size());
    for (const auto& in : node.inputs) args.push_back(lookup(in));
    auto outs = run_node(node, args);
    for (std::size_t o = 0; o < node.outputs.size() && o < outs.size(); ++o) {
      if (!node.outputs[o].empty()) values[node.outputs[o]] = std::move(outs[o]);
    }
    for (const auto& dead : last_use_[k]) values.erase(dead);
  }
  auto it = values.find(output_.name);
  if (it == values.end()) fail(ErrorCode::kInternal, "graph output was not produced");
  return std::move(it->second);
}

}  // namespace wssv::inference
