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
#include <filesystem>
#include <functional>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "common/sample.hpp"
#include "common/time.hpp"
#include "eval/splits.hpp"
#include "imaging/augment.hpp"

namespace wssv::db {
class Database;
}

namespace wssv::dataset {

inline constexpr const char* kSchemaVersion = "1";

struct SampleMeta {
  SampleSource source = SampleSource::kImport;
  std::optional<Timestamp> captured_at;  // defaults to the store clock
  std::optional<std::string> device_label;
};

struct AuditEntry {
  std::string sample_id;
  std::string who;
  Timestamp at{};
  Label old_label = Label::kUnlabeled;
  Label new_label = Label::kUnlabeled;
};

struct SampleFilter {
  std::optional<Label> label;
  std::optional<Split> split;
};

struct LabelCounts {
  std::size_t healthy = 0, wssv = 0, unlabeled = 0;
  bool operator==(const LabelCounts&) const = default;
};

struct DatasetManifest {
  std::vector<ImageSample> samples;  // sorted by id
  LabelCounts counts;
  Timestamp created_at{};
  std::string schema_version = kSchemaVersion;
};

struct ExportBundle {
  std::string manifest_json;          // canonical serialization of the manifest
  std::vector<std::uint8_t> archive;  // ustar of "<id>.<ext>" blobs
};

nlohmann::json to_json(const ImageSample& s);
ImageSample sample_from_json(const nlohmann::json& j);
nlohmann::json to_json(const DatasetManifest& m);
DatasetManifest manifest_from_json(const nlohmann::json& j);
nlohmann::json to_json(const AuditEntry& a);

// Blobs live under <root>/blobs/<first two hex>/<id>.<ext>, records in
// <root>/dataset.db. Writes are serialized; each mutation is one
// transaction and leaves no new blobs behind when it fails.
class DatasetStore {
 public:
  using Clock = std::function<Timestamp()>;

  explicit DatasetStore(const std::filesystem::path& root, Clock clock = now_utc);
  ~DatasetStore();
  DatasetStore(const DatasetStore&) = delete;
  DatasetStore& operator=(const DatasetStore&) = delete;

  const std::filesystem::path& root() const { return root_; }

  // Decodes to validate, dedups by SHA-256. Existing ids are returned as is.
  ImageSample add_sample(const std::vector<std::uint8_t>& bytes, const SampleMeta& meta);
  // Like add_sample, but reports whether a new record was created.
  std::pair<ImageSample, bool> add_sample_ex(const std::vector<std::uint8_t>& bytes, const SampleMeta& meta);

  ImageSample set_label(const std::string& id, Label label, const std::string& who = "operator");

  // Holdout: train_ids -> train, test_ids -> test. Fold plan: sets fold; with
  // validation_fold, that fold becomes validation and the rest train.
  // Returns the number of samples whose split or fold changed.
  std::size_t assign_splits(const eval::SplitAssignment& plan);
  std::size_t assign_splits(const eval::FoldPlan& plan, std::optional<int> validation_fold = std::nullopt);

  // Augments every labeled, non-augmented training sample with each spec and
  // stores the copies (split train). Returns the new records.
  std::vector<ImageSample> expand_training(const std::vector<imaging::AugmentSpec>& specs, std::uint64_t seed);

  // Stores a pre-built augmented copy. Rejects copies outside the training
  // split (kLeakage) and unknown origins (kReference).
  ImageSample add_augmented(const imaging::LabeledImage& copy);

  std::optional<ImageSample> find(const std::string& id) const;
  ImageSample get(const std::string& id) const;  // kNotFound
  std::vector<ImageSample> list(const SampleFilter& filter = {}) const;
  std::vector<std::uint8_t> read_blob(const std::string& id) const;
  std::vector<AuditEntry> audit(const std::string& id) const;

  DatasetManifest manifest(const SampleFilter& filter, Timestamp created_at) const;
  ExportBundle export_bundle(const SampleFilter& filter, Timestamp created_at) const;

  // Inverse of export_bundle. Records already present must match exactly
  // (kConflict otherwise). Returns the number of records created.
  std::size_t import_bundle(const std::string& manifest_json, const std::vector<std::uint8_t>& archive);

 private:
  std::filesystem::path blob_path(const std::string& image_ref) const;
  // Writes the blob if absent; returns true when it was created.
  bool put_blob(const std::string& image_ref, const std::vector<std::uint8_t>& bytes);
  void insert_record(const ImageSample& s);
  std::optional<ImageSample> find_locked(const std::string& id) const;

  std::filesystem::path root_;
  Clock clock_;
  std::unique_ptr<db::Database> db_;
  mutable std::mutex mu_;
};

// Serialization used by export_bundle: 2-space indented, keys in a fixed order.
std::string dump_manifest(const DatasetManifest& m);

}  // namespace wssv::dataset
