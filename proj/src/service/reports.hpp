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

#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"

#include "common/time.hpp"
#include "inference/engine.hpp"

namespace wssv::db {
class Database;
}

namespace wssv::service {

enum class GeoSource { kDevice, kManual };

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  GeoSource source = GeoSource::kManual;
  std::optional<double> accuracy;  // meters

  bool operator==(const GeoPoint&) const = default;
};

struct WaterParams {
  std::optional<double> temperature;       // deg C
  std::optional<double> ph;                // [0, 14]
  std::optional<double> salinity;          // ppt
  std::optional<double> dissolved_oxygen;  // mg/L
  std::optional<double> ammonia;           // mg/L

  bool operator==(const WaterParams&) const = default;
};

struct Environment {
  std::optional<double> air_temperature;  // deg C
  std::optional<std::string> weather_note;

  bool operator==(const Environment&) const = default;
};

struct ReportImage {
  std::string sample_id;
  inference::Prediction prediction;
};

struct ReportRecord {
  std::string id;
  Timestamp created_at{};
  GeoPoint location;
  std::vector<ReportImage> images;
  WaterParams water;
  Environment environment;
  std::optional<std::string> notes;
  std::string submitter;
};

// Client draft: images may omit the prediction, which is then taken from
// the latest stored prediction for that sample.
struct DraftImage {
  std::string sample_id;
  std::optional<inference::Prediction> prediction;
};

struct ReportDraft {
  GeoPoint location;
  std::vector<DraftImage> images;
  WaterParams water;
  Environment environment;
  std::optional<std::string> notes;
  std::string submitter = "anonymous";
};

// Validation errors name the offending field ("location.latitude", ...).
GeoPoint geo_point_from_json(const nlohmann::json& j);
ReportDraft report_draft_from_json(const nlohmann::json& j);
void validate(const GeoPoint& g);
void validate(const WaterParams& w);

nlohmann::json to_json(const GeoPoint& g);
nlohmann::json to_json(const WaterParams& w);
nlohmann::json to_json(const Environment& e);
nlohmann::json to_json(const ReportRecord& r);

struct BoundingBox {
  double min_lon = -180, min_lat = -90, max_lon = 180, max_lat = 90;
};

// "minLon,minLat,maxLon,maxLat"
BoundingBox parse_bbox(const std::string& text);

struct ReportQuery {
  std::optional<Timestamp> from;  // inclusive
  std::optional<Timestamp> to;    // inclusive
  std::optional<BoundingBox> bbox;
  std::optional<inference::Decision> decision;  // any image with that decision

  void validate() const;
};

// Reports and recorded predictions, in <data_dir>/service.db. Reports are
// stored as their serialized JSON and never updated.
class ReportStore {
 public:
  explicit ReportStore(const std::filesystem::path& db_path);
  ~ReportStore();

  void record_prediction(const std::string& sample_id, const inference::Prediction& p, Timestamp at);
  std::optional<inference::Prediction> latest_prediction(const std::string& sample_id) const;

  // Persists `r` (already validated) and returns its stored JSON text.
  std::string insert(const ReportRecord& r);
  std::optional<std::string> fetch_json(const std::string& id) const;
  std::vector<std::string> query_json(const ReportQuery& q) const;

  db::Database& database() { return *db_; }

 private:
  std::unique_ptr<db::Database> db_;
  mutable std::mutex mu_;
};

}  // namespace wssv::service
