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

#include "service/service.hpp"

#include <chrono>
#include <random>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "explain/saliency.hpp"
#include "imaging/image.hpp"
#include "imaging/preprocess.hpp"

namespace wssv::service {

namespace {

constexpr const char* kNoModel =
    "no active model; upload a bundle with POST /api/v1/models, then activate it with "
    "POST /api/v1/models/{id}/activate";

}  // namespace

SurveillanceService::SurveillanceService(ServiceConfig config, Clock clock)
    : config_(std::move(config)), clock_(std::move(clock)) {
  config_.validate();
  std::error_code ec;
  std::filesystem::create_directories(config_.data_dir, ec);
  if (ec) fail(ErrorCode::kIo, "cannot create data directory " + config_.data_dir.string() + ": " + ec.message());
  overlay_dir_ = config_.data_dir / "overlays";
  std::filesystem::create_directories(overlay_dir_, ec);
  dataset_ = std::make_unique<dataset::DatasetStore>(config_.data_dir / "dataset", clock_);
  reports_ = std::make_unique<ReportStore>(config_.data_dir / "service.db");
  registry_ = std::make_unique<ModelRegistry>(config_.data_dir / "models", config_.data_dir / "service.db");
}

SurveillanceService::~SurveillanceService() = default;

nlohmann::json SurveillanceService::health() const {
  auto active = registry_->active_entry();
  return {{"status", "ok"},
          {"time", format_rfc3339(clock_())},
          {"active_model", active ? to_json(*active) : nlohmann::json(nullptr)}};
}

nlohmann::json SurveillanceService::predict(const std::vector<std::uint8_t>& image, bool want_saliency,
                                            const std::optional<std::string>& device_label) {
  auto handle = registry_->active();  // held for the whole request
  if (!handle) fail(ErrorCode::kConflict, kNoModel);
  const auto decoded = imaging::decode_image(image);
  const auto cfg = handle->metadata().preprocess_config();
  const auto input = imaging::preprocess(decoded, cfg, "field_report");
  const auto prediction = handle->predict(input);

  nlohmann::json overlay = nullptr;
  if (want_saliency) {
    const auto map = explain::occlusion_saliency(*handle, input, config_.occlusion);
    const auto png = imaging::encode_png(explain::render_overlay(map, imaging::crop_and_resize(decoded, cfg)));
    const auto name = sha256_hex(png) + ".png";
    const auto path = overlay_dir_ / name;
    if (!std::filesystem::exists(path)) write_file_atomic(path, std::span<const std::uint8_t>(png));
    overlay = {{"url", "/api/v1/overlays/" + name},
               {"side", map.side},
               {"baseline_score", map.baseline_score},
               {"patch_side", config_.occlusion.patch_side},
               {"stride", config_.occlusion.stride}};
  }

  dataset::SampleMeta meta;
  meta.source = SampleSource::kFieldReport;
  meta.device_label = device_label;
  const auto sample = dataset_->add_sample(image, meta);
  reports_->record_prediction(sample.id, prediction, clock_());
  return {{"sample_id", sample.id}, {"prediction", inference::to_json(prediction)}, {"overlay", overlay}};
}

std::string SurveillanceService::submit_report(const nlohmann::json& draft_json) {
  const auto draft = report_draft_from_json(draft_json);
  ReportRecord r;
  for (std::size_t i = 0; i < draft.images.size(); ++i) {
    const auto& di = draft.images[i];
    const std::string path = "images[" + std::to_string(i) + "]";
    if (!dataset_->find(di.sample_id)) {
      throw Error(ErrorCode::kReference, path + ".sample_id: unknown sample '" + di.sample_id + "'",
                  path + ".sample_id");
    }
    ReportImage img;
    img.sample_id = di.sample_id;
    if (di.prediction) {
      img.prediction = *di.prediction;
    } else if (auto p = reports_->latest_prediction(di.sample_id)) {
      img.prediction = *p;
    } else {
      fail_field(ErrorCode::kValidation, path + ".prediction", "not given and no prediction recorded for this sample");
    }
    r.images.push_back(std::move(img));
  }
  r.id = random_report_id();
  r.created_at = clock_();
  r.location = draft.location;
  r.water = draft.water;
  r.environment = draft.environment;
  r.notes = draft.notes;
  r.submitter = draft.submitter;
  return reports_->insert(r);
}

std::string SurveillanceService::get_report(const std::string& id) const {
  auto body = reports_->fetch_json(id);
  if (!body) fail(ErrorCode::kNotFound, "no report with id '" + id + "'");
  return *body;
}

std::vector<std::string> SurveillanceService::query_reports(const ReportQuery& q) const {
  return reports_->query_json(q);
}

nlohmann::json SurveillanceService::add_sample(const std::vector<std::uint8_t>& image, const dataset::SampleMeta& meta,
                                               std::optional<Label> label, const std::string& who) {
  auto [sample, created] = dataset_->add_sample_ex(image, meta);
  if (label && *label != sample.label) sample = dataset_->set_label(sample.id, *label, who);
  return {{"sample", dataset::to_json(sample)}, {"created", created}};
}

nlohmann::json SurveillanceService::list_samples(const dataset::SampleFilter& filter) const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : dataset_->list(filter)) arr.push_back(dataset::to_json(s));
  return {{"samples", arr}};
}

nlohmann::json SurveillanceService::set_label(const std::string& id, Label label, const std::string& who) {
  const auto s = dataset_->set_label(id, label, who);
  nlohmann::json audit = nlohmann::json::array();
  for (const auto& a : dataset_->audit(id)) audit.push_back(dataset::to_json(a));
  return {{"sample", dataset::to_json(s)}, {"audit", audit}};
}

dataset::ExportBundle SurveillanceService::export_dataset(const dataset::SampleFilter& filter) const {
  return dataset_->export_bundle(filter, clock_());
}

nlohmann::json SurveillanceService::import_dataset(const std::string& manifest_json,
                                                   const std::vector<std::uint8_t>& archive) {
  return {{"created", dataset_->import_bundle(manifest_json, archive)}};
}

nlohmann::json SurveillanceService::upload_model(const std::vector<std::uint8_t>& model_blob,
                                                 const std::string& metadata_json,
                                                 const std::optional<std::string>& checksum) {
  nlohmann::json meta;
  try {
    meta = nlohmann::json::parse(metadata_json);
  } catch (const nlohmann::json::exception& e) {
    fail_field(ErrorCode::kValidation, "metadata", std::string("not valid JSON: ") + e.what());
  }
  inference::ModelBundle bundle;
  bundle.metadata = inference::metadata_from_json(meta, config_.default_threshold);
  bundle.model_blob = model_blob;
  bundle.checksum = checksum ? *checksum : sha256_hex(model_blob);
  return to_json(registry_->upload(bundle, clock_()));
}

nlohmann::json SurveillanceService::activate_model(const std::string& id) { return to_json(registry_->activate(id)); }

nlohmann::json SurveillanceService::list_models() const {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& e : registry_->list()) arr.push_back(to_json(e));
  return {{"models", arr}};
}

std::filesystem::path SurveillanceService::overlay_path(const std::string& name) const {
  const bool ok = name.size() == 68 && name.ends_with(".png") &&
                  name.find_first_not_of("0123456789abcdef") == 64;
  const auto path = overlay_dir_ / name;
  if (!ok || !std::filesystem::exists(path)) fail(ErrorCode::kNotFound, "no overlay '" + name + "'");
  return path;
}

ReportQuery parse_report_query(const std::optional<std::string>& from, const std::optional<std::string>& to,
                               const std::optional<std::string>& bbox, const std::optional<std::string>& decision) {
  ReportQuery q;
  auto ts = [](const std::string& text, const char* field) {
    try {
      return parse_rfc3339(text);
    } catch (const Error& e) {
      fail_field(ErrorCode::kValidation, field, e.what());
    }
  };
  if (from) q.from = ts(*from, "from");
  if (to) q.to = ts(*to, "to");
  if (bbox) q.bbox = parse_bbox(*bbox);
  if (decision) {
    if (*decision == "wssv") q.decision = inference::Decision::kWssv;
    else if (*decision == "healthy") q.decision = inference::Decision::kHealthy;
    else fail_field(ErrorCode::kValidation, "decision", "must be healthy or wssv");
  }
  q.validate();
  return q;
}

std::string random_report_id() {
  static thread_local std::random_device rd;
  static constexpr char kHex[] = "0123456789abcdef";
  std::string id;
  for (int i = 0; i < 8; ++i) {
    const auto v = rd();
    for (int n = 0; n < 4; ++n) id.push_back(kHex[(v >> (4 * n)) & 0xF]);
  }
  return id;
}

}  // namespace wssv::service
