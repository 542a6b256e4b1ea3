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

#include "inference/engine.hpp"

#include <algorithm>
#include <chrono>
#include <cctype>
#include <cmath>
#include <map>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"

namespace wssv::inference {

using nlohmann::json;

std::string to_string(OutputKind kind) { return kind == OutputKind::kLogit ? "logit" : "probability"; }
std::string to_string(Decision decision) { return decision == Decision::kWssv ? "wssv" : "healthy"; }

void ModelMetadata::validate() const {
  if (name.empty()) fail_field(ErrorCode::kConfiguration, "name", "must not be empty");
  if (version.empty()) fail_field(ErrorCode::kConfiguration, "version", "must not be empty");
  if (input_name.empty()) fail_field(ErrorCode::kConfiguration, "input_name", "must not be empty");
  if (input_side < 8) fail_field(ErrorCode::kConfiguration, "input_side", "must be >= 8");
  if (!(decision_threshold > 0.0 && decision_threshold < 1.0)) {
    fail_field(ErrorCode::kConfiguration, "decision_threshold", "must lie strictly inside (0, 1)");
  }
  for (int c = 0; c < 3; ++c) {
    if (!std::isfinite(normalization.scale[c]) || !std::isfinite(normalization.offset[c])) {
      fail_field(ErrorCode::kConfiguration, "normalization", "values must be finite");
    }
  }
}

imaging::PreprocessConfig ModelMetadata::preprocess_config() const {
  imaging::PreprocessConfig cfg;
  cfg.target_side = input_side;
  cfg.normalization = normalization;
  cfg.layout = channel_layout;
  return cfg;
}

namespace {

template <typename T>
T field(const json& j, const char* key) {
  if (!j.contains(key)) fail_field(ErrorCode::kConfiguration, key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    fail_field(ErrorCode::kConfiguration, key, "wrong type");
  }
}

std::array<double, 3> triple(const json& j, const char* key) {
  auto v = field<std::vector<double>>(j, key);
  if (v.size() == 1) v.resize(3, v[0]);
  if (v.size() != 3) fail_field(ErrorCode::kConfiguration, std::string("normalization.") + key, "needs 3 values");
  return {v[0], v[1], v[2]};
}

}  // namespace

ModelMetadata metadata_from_json(const json& j, double default_threshold) {
  if (!j.is_object()) fail(ErrorCode::kConfiguration, "metadata must be a JSON object");
  ModelMetadata m;
  m.name = field<std::string>(j, "name");
  m.version = field<std::string>(j, "version");
  m.input_name = field<std::string>(j, "input_name");
  m.input_side = field<int>(j, "input_side");
  const auto layout = field<std::string>(j, "channel_layout");
  if (layout != "planar" && layout != "interleaved") {
    fail_field(ErrorCode::kConfiguration, "channel_layout", "expected planar or interleaved");
  }
  m.channel_layout = imaging::parse_channel_layout(layout);
  const auto norm = field<json>(j, "normalization");
  m.normalization.scale = triple(norm, "scale");
  m.normalization.offset = triple(norm, "offset");
  const auto kind = field<std::string>(j, "output_kind");
  if (kind == "logit") m.output_kind = OutputKind::kLogit;
  else if (kind == "probability") m.output_kind = OutputKind::kProbability;
  else fail_field(ErrorCode::kConfiguration, "output_kind", "expected logit or probability");
  m.decision_threshold = j.contains("decision_threshold") && !j["decision_threshold"].is_null()
                             ? field<double>(j, "decision_threshold")
                             : default_threshold;
  const auto class_map = field<std::map<std::string, std::string>>(j, "class_map");
  const std::map<std::string, std::string> expected{{"0", "healthy"}, {"1", "wssv"}};
  if (class_map != expected) {
    fail_field(ErrorCode::kConfiguration, "class_map", "must be exactly {\"0\": \"healthy\", \"1\": \"wssv\"}");
  }
  if (j.contains("provenance") && !j["provenance"].is_null()) {
    const auto& p = j["provenance"];
    TrainingProvenance tp;
    tp.epochs = field<std::int64_t>(p, "epochs");
    tp.batch_size = field<std::int64_t>(p, "batch_size");
    tp.learning_rate = field<double>(p, "learning_rate");
    tp.optimizer = field<std::string>(p, "optimizer");
    tp.loss = field<std::string>(p, "loss");
    m.provenance = tp;
  }
  m.validate();
  return m;
}

json to_json(const ModelMetadata& m) {
  json j{{"name", m.name},
         {"version", m.version},
         {"input_name", m.input_name},
         {"input_side", m.input_side},
         {"channel_layout", imaging::to_string(m.channel_layout)},
         {"normalization",
          {{"scale", std::vector<double>(m.normalization.scale.begin(), m.normalization.scale.end())},
           {"offset", std::vector<double>(m.normalization.offset.begin(), m.normalization.offset.end())}}},
         {"output_kind", to_string(m.output_kind)},
         {"decision_threshold", m.decision_threshold},
         {"class_map", {{"0", "healthy"}, {"1", "wssv"}}}};
  if (m.provenance) {
    j["provenance"] = {{"epochs", m.provenance->epochs},
                       {"batch_size", m.provenance->batch_size},
                       {"learning_rate", m.provenance->learning_rate},
                       {"optimizer", m.provenance->optimizer},
                       {"loss", m.provenance->loss}};
  } else {
    j["provenance"] = nullptr;
  }
  return j;
}

ModelBundle read_bundle(const std::filesystem::path& dir, double default_threshold) {
  if (!std::filesystem::is_directory(dir)) fail(ErrorCode::kIo, "bundle directory not found: " + dir.string());
  ModelBundle b;
  b.model_blob = read_file(dir / kModelFile);
  json meta;
  try {
    meta = json::parse(read_text_file(dir / kMetadataFile));
  } catch (const json::parse_error& e) {
    fail(ErrorCode::kConfiguration, std::string("metadata.json: ") + e.what());
  }
  b.metadata = metadata_from_json(meta, default_threshold);
  std::string sum = read_text_file(dir / kChecksumFile);
  sum.erase(std::remove_if(sum.begin(), sum.end(), [](unsigned char ch) { return std::isspace(ch); }), sum.end());
  b.checksum = sum;
  return b;
}

void write_bundle(const ModelBundle& bundle, const std::filesystem::path& dir) {
  std::filesystem::create_directories(dir);
  write_file_atomic(dir / kModelFile, bundle.model_blob);
  write_file_atomic(dir / kMetadataFile, to_json(bundle.metadata).dump(2) + "\n");
  write_file_atomic(dir / kChecksumFile, bundle.checksum + "\n");
}

json to_json(const Prediction& p) {
  return {{"score", p.score},
          {"decision", to_string(p.decision)},
          {"model_id", p.model_id},
          {"latency_ms", p.latency_ms},
          {"input_provenance", p.input_provenance}};
}

Prediction prediction_from_json(const json& j) {
  Prediction p;
  try {
    p.score = j.at("score").get<double>();
    const auto d = j.at("decision").get<std::string>();
    if (d != "wssv" && d != "healthy") fail_field(ErrorCode::kValidation, "decision", "expected healthy or wssv");
    p.decision = d == "wssv" ? Decision::kWssv : Decision::kHealthy;
    p.model_id = j.at("model_id").get<std::string>();
    p.latency_ms = j.value("latency_ms", 0.0);
    p.input_provenance = j.value("input_provenance", std::string("ad-hoc"));
  } catch (const json::exception& e) {
    fail(ErrorCode::kValidation, std::string("prediction: ") + e.what());
  }
  if (!(p.score >= 0.0 && p.score <= 1.0)) fail_field(ErrorCode::kValidation, "score", "must be in [0, 1]");
  if (p.latency_ms < 0.0) fail_field(ErrorCode::kValidation, "latency_ms", "must be >= 0");
  return p;
}

double sigmoid(double x) {
  if (!std::isfinite(x)) fail(ErrorCode::kNumeric, "sigmoid of non-finite value");
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

Decision decide(double score, double threshold) {
  return score >= threshold ? Decision::kWssv : Decision::kHealthy;
}

ModelHandle::ModelHandle(ModelMetadata metadata, Graph graph, std::string checksum)
    : metadata_(std::move(metadata)), graph_(std::move(graph)), checksum_(std::move(checksum)),
      model_id_(metadata_.name + "@" + metadata_.version) {}

void ModelHandle::check_input(const imaging::ModelInput& input) const {
  if (input.side != metadata_.input_side) {
    fail(ErrorCode::kInput, "input side " + std::to_string(input.side) + " does not match model input side " +
                                std::to_string(metadata_.input_side));
  }
  if (input.layout != metadata_.channel_layout) {
    fail(ErrorCode::kInput, "input layout " + imaging::to_string(input.layout) + " does not match model layout " +
                                imaging::to_string(metadata_.channel_layout));
  }
  if (input.values.size() != static_cast<std::size_t>(input.side) * input.side * 3) {
    fail(ErrorCode::kInput, "input tensor length does not match side*side*3");
  }
}

float ModelHandle::run_unchecked(const imaging::ModelInput& input) const {
  const std::int64_t s = input.side;
  Shape shape = metadata_.channel_layout == imaging::ChannelLayout::kPlanar ? Shape{1, 3, s, s} : Shape{1, s, s, 3};
  const Tensor out = graph_.run(Tensor::floats(std::move(shape), input.values));
  if (out.dtype != DType::kFloat || out.size() != 1) {
    fail(ErrorCode::kConfiguration, "model produced " + shape_string(out.shape) + ", expected a single value");
  }
  return out.f[0];
}

float ModelHandle::forward(const imaging::ModelInput& input) const {
  check_input(input);
  return run_unchecked(input);
}

double ModelHandle::score_from_raw(float raw) const {
  if (metadata_.output_kind == OutputKind::kLogit) return sigmoid(raw);
  const double p = raw;
  if (!(p >= 0.0 && p <= 1.0)) {
    fail(ErrorCode::kModelContract,
         "model declared probability output but produced " + std::to_string(p) + " outside [0, 1]");
  }
  return p;
}

Prediction ModelHandle::predict_unchecked(const imaging::ModelInput& input) const {
  check_input(input);
  const auto start = std::chrono::steady_clock::now();
  const float raw = run_unchecked(input);
  const auto stop = std::chrono::steady_clock::now();
  Prediction p;
  p.score = score_from_raw(raw);
  p.decision = decide(p.score, metadata_.decision_threshold);
  p.model_id = model_id_;
  p.latency_ms = std::chrono::duration<double, std::milli>(stop - start).count();
  p.input_provenance = input.provenance.empty() ? "ad-hoc" : input.provenance;
  return p;
}

Prediction ModelHandle::predict(const imaging::ModelInput& input) const {
  if (exclusive_.load()) fail(ErrorCode::kBusy, "model " + model_id_ + " is reserved by a running benchmark");
  return predict_unchecked(input);
}

std::vector<Prediction> ModelHandle::predict_batch(const std::vector<imaging::ModelInput>& inputs) const {
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    try {
      check_input(inputs[k]);
    } catch (const Error& e) {
      throw Error(e.code(), "inputs[" + std::to_string(k) + "]: " + e.what(), "inputs[" + std::to_string(k) + "]");
    }
  }
  std::vector<Prediction> out;
  out.reserve(inputs.size());
  for (std::size_t k = 0; k < inputs.size(); ++k) {
    try {
      out.push_back(predict(inputs[k]));
    } catch (const Error& e) {
      throw Error(e.code(), "inputs[" + std::to_string(k) + "]: " + e.what(), "inputs[" + std::to_string(k) + "]");
    }
  }
  return out;
}

bool ModelHandle::try_begin_exclusive() const {
  bool expected = false;
  return exclusive_.compare_exchange_strong(expected, true);
}

void ModelHandle::end_exclusive() const { exclusive_.store(false); }

ExclusiveUse::ExclusiveUse(const ModelHandle& handle) : handle_(handle) {
  if (!handle_.try_begin_exclusive()) {
    fail(ErrorCode::kBusy, "model " + handle_.model_id() + " is already reserved by another benchmark");
  }
}

ExclusiveUse::~ExclusiveUse() { handle_.end_exclusive(); }

Prediction ExclusiveUse::predict(const imaging::ModelInput& input) const { return handle_.predict_unchecked(input); }

namespace {

void check_declared_input(const ModelMetadata& meta, const ValueInfo& in) {
  if (in.name != meta.input_name) {
    fail(ErrorCode::kConfiguration,
         "metadata input_name '" + meta.input_name + "' but model input is '" + in.name + "'");
  }
  if (in.dims.size() != 4) {
    fail(ErrorCode::kConfiguration, "model input must be rank 4, declared rank " + std::to_string(in.dims.size()));
  }
  auto dim_text = [](const std::optional<std::int64_t>& d) { return d ? std::to_string(*d) : std::string("?"); };
  if (in.dims[0] && *in.dims[0] != 1) {
    fail(ErrorCode::kConfiguration, "model batch dimension must be 1 or symbolic, got " + dim_text(in.dims[0]));
  }
  const bool planar = meta.channel_layout == imaging::ChannelLayout::kPlanar;
  const auto& ch = planar ? in.dims[1] : in.dims[3];
  const auto& h = planar ? in.dims[2] : in.dims[1];
  const auto& w = planar ? in.dims[3] : in.dims[2];
  if (ch && *ch != 3) {
    fail(ErrorCode::kConfiguration, "model declares " + dim_text(ch) + " channels for " +
                                        imaging::to_string(meta.channel_layout) + " layout, expected 3");
  }
  for (const auto* d : {&h, &w}) {
    if (*d && **d != meta.input_side) {
      fail(ErrorCode::kConfiguration, "metadata input_side " + std::to_string(meta.input_side) +
                                          " but model declares " + dim_text(*d));
    }
  }
}

void check_declared_output(const ValueInfo& out) {
  for (std::size_t k = 0; k < out.dims.size(); ++k) {
    const auto& d = out.dims[k];
    if (d && *d != 1) {
      fail(ErrorCode::kConfiguration, "model output '" + out.name + "' must hold a single value, dimension " +
                                          std::to_string(k) + " is " + std::to_string(*d));
    }
  }
}

}  // namespace

std::shared_ptr<ModelHandle> load_model(const ModelBundle& bundle) {
  bundle.metadata.validate();
  const std::string actual = sha256_hex(bundle.model_blob);
  std::string declared = bundle.checksum;
  std::transform(declared.begin(), declared.end(), declared.begin(), [](unsigned char c) { return std::tolower(c); });
  if (actual != declared) {
    fail(ErrorCode::kIntegrity, "model checksum mismatch: declared " + bundle.checksum + ", actual " + actual);
  }
  Graph graph = Graph::parse(bundle.model_blob);
  check_declared_input(bundle.metadata, graph.input());
  check_declared_output(graph.output());
  std::shared_ptr<ModelHandle> handle(new ModelHandle(bundle.metadata, std::move(graph), actual));

  // Dry run catches shape errors the declarations do not reveal.
  imaging::ModelInput probe;
  probe.side = bundle.metadata.input_side;
  probe.layout = bundle.metadata.channel_layout;
  probe.values.assign(static_cast<std::size_t>(probe.side) * probe.side * 3, 0.0f);
  handle->forward(probe);
  return handle;
}

}  // namespace wssv::inference
