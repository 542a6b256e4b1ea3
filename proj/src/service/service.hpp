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
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "common/time.hpp"
#include "dataset/store.hpp"
#include "service/config.hpp"
#include "service/registry.hpp"
#include "service/reports.hpp"

namespace wssv::service {

// Transport-independent service operations. Every method is safe to call
// from concurrent request threads. JSON in, JSON (or stored JSON text) out.
class SurveillanceService {
 public:
  using Clock = std::function<Timestamp()>;

  explicit SurveillanceService(ServiceConfig config, Clock clock = now_utc);
  ~SurveillanceService();

  const ServiceConfig& config() const { return config_; }
  dataset::DatasetStore& dataset() { return *dataset_; }
  ModelRegistry& registry() { return *registry_; }
  ReportStore& reports() { return *reports_; }

  nlohmann::json health() const;

  // Stores the image as an unlabeled field_report sample and records the
  // prediction. kConflict when no model is active.
  nlohmann::json predict(const std::vector<std::uint8_t>& image, bool want_saliency,
                         const std::optional<std::string>& device_label = std::nullopt);

  // Returns the stored JSON text of the new report.
  std::string submit_report(const nlohmann::json& draft);
  std::string get_report(const std::string& id) const;  // kNotFound
  std::vector<std::string> query_reports(const ReportQuery& q) const;

  nlohmann::json add_sample(const std::vector<std::uint8_t>& image, const dataset::SampleMeta& meta,
                            std::optional<Label> label, const std::string& who);
  nlohmann::json list_samples(const dataset::SampleFilter& filter) const;
  nlohmann::json set_label(const std::string& id, Label label, const std::string& who);
  dataset::ExportBundle export_dataset(const dataset::SampleFilter& filter) const;
  nlohmann::json import_dataset(const std::string& manifest_json, const std::vector<std::uint8_t>& archive);

  nlohmann::json upload_model(const std::vector<std::uint8_t>& model_blob, const std::string& metadata_json,
                              const std::optional<std::string>& checksum);
  nlohmann::json activate_model(const std::string& id);
  nlohmann::json list_models() const;

  // Absolute path of a stored overlay; kNotFound for unknown or malformed names.
  std::filesystem::path overlay_path(const std::string& name) const;

 private:
  ServiceConfig config_;
  Clock clock_;
  std::filesystem::path overlay_dir_;
  std::unique_ptr<dataset::DatasetStore> dataset_;
  std::unique_ptr<ReportStore> reports_;
  std::unique_ptr<ModelRegistry> registry_;
};

// Query-string form of ReportQuery: from, to (RFC 3339), bbox, decision.
ReportQuery parse_report_query(const std::optional<std::string>& from, const std::optional<std::string>& to,
                               const std::optional<std::string>& bbox, const std::optional<std::string>& decision);

// 32 lowercase hex digits from the OS entropy source.
std::string random_report_id();

}  // namespace wssv::service
