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

#include <atomic>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "imaging/preprocess.hpp"
#include "inference/graph.hpp"

namespace wssv::inference {

enum class OutputKind { kLogit, kProbability };
enum class Decision { kHealthy, kWssv };

std::string to_string(OutputKind kind);
std::string to_string(Decision decision);

// Training-run provenance recorded by the external trainer.
struct TrainingProvenance {
  std::int64_t epochs = 0;
  std::int64_t batch_size = 0;
  double learning_rate = 0.0;
  std::string optimizer;
  std::string loss;
};

struct ModelMetadata {
  std::string name;
  std::string version;
  std::string input_name = "input";
  int input_side = 224;
  imaging::ChannelLayout channel_layout = imaging::ChannelLayout::kPlanar;
  imaging::Normalization normalization;
  OutputKind output_kind = OutputKind::kLogit;
  double decision_threshold = 0.5;
  std::optional<TrainingProvenance> provenance;

  void validate() const;
  imaging::PreprocessConfig preprocess_config() const;
};

// `default_threshold` fills a missing decision_threshold.
ModelMetadata metadata_from_json(const nlohmann::json& j, double default_threshold = 0.5);
nlohmann::json to_json(const ModelMetadata& m);

struct ModelBundle {
  ModelMetadata metadata;
  std::vector<std::uint8_t> model_blob;
  std::string checksum;  // SHA-256 hex of model_blob
};

// Directory layout: model.onnx, metadata.json, model.sha256.
inline constexpr const char* kModelFile = "model.onnx";
inline constexpr const char* kMetadataFile = "metadata.json";
inline constexpr const char* kChecksumFile = "model.sha256";

ModelBundle read_bundle(const std::filesystem::path& dir, double default_threshold = 0.5);
void write_bundle(const ModelBundle& bundle, const std::filesystem::path& dir);

struct Prediction {
  double score = 0.0;
  Decision decision = Decision::kHealthy;
  std::string model_id;
  double latency_ms = 0.0;
  std::string input_provenance = "ad-hoc";
};

nlohmann::json to_json(const Prediction& p);
Prediction prediction_from_json(const nlohmann::json& j);

// 1 / (1 + e^-x). Throws kNumeric for non-finite x.
double sigmoid(double x);

// wssv iff score >= threshold.
Decision decide(double score, double threshold);

class ModelHandle {
 public:
  const ModelMetadata& metadata() const { return metadata_; }
  const std::string& checksum() const { return checksum_; }
  // "<name>@<version>"
  const std::string& model_id() const { return model_id_; }
  int input_side() const { return metadata_.input_side; }

  // Raw network output for one input (no sigmoid, no checks on range).
  float forward(const imaging::ModelInput& input) const;

  Prediction predict(const imaging::ModelInput& input) const;
  std::vector<Prediction> predict_batch(const std::vector<imaging::ModelInput>& inputs) const;

  // Converts a raw output into a score per output_kind.
  double score_from_raw(float raw) const;

  // Exclusive-use marker for latency benchmarks. Returns false when already held.
  bool try_begin_exclusive() const;
  void end_exclusive() const;

 private:
  friend std::shared_ptr<ModelHandle> load_model(const ModelBundle& bundle);
  ModelHandle(ModelMetadata metadata, Graph graph, std::string checksum);

  void check_input(const imaging::ModelInput& input) const;
  float run_unchecked(const imaging::ModelInput& input) const;
  Prediction predict_unchecked(const imaging::ModelInput& input) const;
  friend class ExclusiveUse;

  ModelMetadata metadata_;
  Graph graph_;
  std::string checksum_;
  std::string model_id_;
  mutable std::atomic<bool> exclusive_{false};
};

// Verifies checksum, decodes the graph, checks declared shapes against the
// metadata and performs a dry run. Errors: kIntegrity, kConfiguration,
// kCapability.
std::shared_ptr<ModelHandle> load_model(const ModelBundle& bundle);

// RAII holder of a handle's exclusive-use flag. Predictions issued through
// it bypass the busy check.
class ExclusiveUse {
 public:
  explicit ExclusiveUse(const ModelHandle& handle);
  ~ExclusiveUse();
  ExclusiveUse(const ExclusiveUse&) = delete;
  ExclusiveUse& operator=(const ExclusiveUse&) = delete;

  Prediction predict(const imaging::ModelInput& input) const;

 private:
  const ModelHandle& handle_;
};

}  // namespace wssv::inference
