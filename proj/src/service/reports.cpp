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

#include "service/reports.hpp"

#include <cmath>
#include <sstream>

#include "common/error.hpp"
#include "dataset/sqlite.hpp"

namespace wssv::service {

namespace {

std::optional<double> opt_number(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_number()) fail_field(ErrorCode::kValidation, path + key, "must be a number");
  const double v = j.at(key).get<double>();
  if (!std::isfinite(v)) fail_field(ErrorCode::kValidation, path + key, "must be finite");
  return v;
}

std::optional<std::string> opt_string(const nlohmann::json& j, const char* key, const std::string& path) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  if (!j.at(key).is_string()) fail_field(ErrorCode::kValidation, path + key, "must be a string");
  return j.at(key).get<std::string>();
}

void check_range(const std::optional<double>& v, double lo, double hi, const std::string& field) {
  if (v && (*v < lo || *v > hi)) {
    std::ostringstream os;
    os << "value " << *v << " outside [" << lo << ", " << hi << "]";
    fail_field(ErrorCode::kValidation, field, os.str());
  }
}

void check_nonnegative(const std::optional<double>& v, const std::string& field) {
  if (v && *v < 0.0) fail_field(ErrorCode::kValidation, field, "must be >= 0");
}

void reject_unknown(const nlohmann::json& j, std::initializer_list<const char*> known, const std::string& path) {
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (const char* k : known) ok = ok || key == k;
    if (!ok) fail_field(ErrorCode::kValidation, path + key, "unknown field");
  }
}

std::string geo_source_name(GeoSource s) { return s == GeoSource::kDevice ? "device" : "manual"; }

template <typename T>
void put_opt(nlohmann::json& j, const char* key, const std::optional<T>& v) {
  j[key] = v ? nlohmann::json(*v) : nlohmann::json(nullptr);
}

std::int64_t to_ms(Timestamp t) { return t.time_since_epoch().count(); }

}  // namespace

void validate(const GeoPoint& g) {
  if (!std::isfinite(g.latitude) || g.latitude < -90.0 || g.latitude > 90.0) {
    fail_field(ErrorCode::kValidation, "latitude", "must be within [-90, 90]");
  }
  if (!std::isfinite(g.longitude) || g.longitude < -180.0 || g.longitude > 180.0) {
    fail_field(ErrorCode::kValidation, "longitude", "must be within [-180, 180]");
  }
  check_nonnegative(g.accuracy, "accuracy");
}

void validate(const WaterParams& w) {
  check_range(w.ph, 0.0, 14.0, "water.ph");
  check_nonnegative(w.salinity, "water.salinity");
  check_nonnegative(w.dissolved_oxygen, "water.dissolved_oxygen");
  check_nonnegative(w.ammonia, "water.ammonia");
}

GeoPoint geo_point_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail_field(ErrorCode::kValidation, "location", "must be an object");
  reject_unknown(j, {"latitude", "longitude", "source", "accuracy"}, "location.");
  GeoPoint g;
  const auto lat = opt_number(j, "latitude", "");
  const auto lon = opt_number(j, "longitude", "");
  if (!lat) fail_field(ErrorCode::kValidation, "latitude", "required");
  if (!lon) fail_field(ErrorCode::kValidation, "longitude", "required");
  g.latitude = *lat;
  g.longitude = *lon;
  const auto src = opt_string(j, "source", "location.");
  if (!src) fail_field(ErrorCode::kValidation, "location.source", "required (device or manual)");
  if (*src == "device") g.source = GeoSource::kDevice;
  else if (*src == "manual") g.source = GeoSource::kManual;
  else fail_field(ErrorCode::kValidation, "location.source", "must be device or manual");
  g.accuracy = opt_number(j, "accuracy", "location.");
  validate(g);
  return g;
}

ReportDraft report_draft_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "report draft must be a JSON object");
  reject_unknown(j, {"location", "images", "water", "environment", "notes", "submitter"}, "");
  ReportDraft d;
  if (!j.contains("location")) fail_field(ErrorCode::kValidation, "location", "required");
  d.location = geo_point_from_json(j.at("location"));

  if (!j.contains("images") || !j.at("images").is_array()) fail_field(ErrorCode::kValidation, "images", "must be an array");
  const auto& imgs = j.at("images");
  if (imgs.empty()) fail_field(ErrorCode::kValidation, "images", "at least one image is required");
  for (std::size_t i = 0; i < imgs.size(); ++i) {
    const std::string path = "images[" + std::to_string(i) + "]";
    DraftImage di;
    if (imgs[i].is_string()) {
      di.sample_id = imgs[i].get<std::string>();
    } else if (imgs[i].is_object()) {
      reject_unknown(imgs[i], {"sample_id", "prediction"}, path + ".");
      auto id = opt_string(imgs[i], "sample_id", path + ".");
      if (!id) fail_field(ErrorCode::kValidation, path + ".sample_id", "required");
      di.sample_id = *id;
      if (imgs[i].contains("prediction") && !imgs[i].at("prediction").is_null()) {
        try {
          di.prediction = inference::prediction_from_json(imgs[i].at("prediction"));
        } catch (const Error& e) {
          fail_field(ErrorCode::kValidation, path + ".prediction", e.what());
        }
      }
    } else {
      fail_field(ErrorCode::kValidation, path, "must be a sample id or an object");
    }
    if (di.sample_id.empty()) fail_field(ErrorCode::kValidation, path + ".sample_id", "must not be empty");
    d.images.push_back(std::move(di));
  }

  if (j.contains("water") && !j.at("water").is_null()) {
    const auto& w = j.at("water");
    if (!w.is_object()) fail_field(ErrorCode::kValidation, "water", "must be an object");
    reject_unknown(w, {"temperature", "ph", "salinity", "dissolved_oxygen", "ammonia"}, "water.");
    d.water.temperature = opt_number(w, "temperature", "water.");
    d.water.ph = opt_number(w, "ph", "water.");
    d.water.salinity = opt_number(w, "salinity", "water.");
    d.water.dissolved_oxygen = opt_number(w, "dissolved_oxygen", "water.");
    d.water.ammonia = opt_number(w, "ammonia", "water.");
    validate(d.water);
  }
  if (j.contains("environment") && !j.at("environment").is_null()) {
    const auto& e = j.at("environment");
    if (!e.is_object()) fail_field(ErrorCode::kValidation, "environment", "must be an object");
    reject_unknown(e, {"air_temperature", "weather_note"}, "environment.");
    d.environment.air_temperature = opt_number(e, "air_temperature", "environment.");
    d.environment.weather_note = opt_string(e, "weather_note", "environment.");
  }
  d.notes = opt_string(j, "notes", "");
  if (auto s = opt_string(j, "submitter", "")) d.submitter = *s;
  return d;
}

nlohmann::json to_json(const GeoPoint& g) {
  nlohmann::json j = {{"latitude", g.latitude}, {"longitude", g.longitude}, {"source", geo_source_name(g.source)}};
  put_opt(j, "accuracy", g.accuracy);
  return j;
}

nlohmann::json to_json(const WaterParams& w) {
  nlohmann::json j = nlohmann::json::object();
  put_opt(j, "temperature", w.temperature);
  put_opt(j, "ph", w.ph);
  put_opt(j, "salinity", w.salinity);
  put_opt(j, "dissolved_oxygen", w.dissolved_oxygen);
  put_opt(j, "ammonia", w.ammonia);
  return j;
}

nlohmann::json to_json(const Environment& e) {
  nlohmann::json j = nlohmann::json::object();
  put_opt(j, "air_temperature", e.air_temperature);
  put_opt(j, "weather_note", e.weather_note);
  return j;
}

nlohmann::json to_json(const ReportRecord& r) {
  nlohmann::json images = nlohmann::json::array();
  for (const auto& img : r.images) {
    images.push_back({{"sample_id", img.sample_id}, {"prediction", inference::to_json(img.prediction)}});
  }
  nlohmann::json j = {{"id", r.id},
                      {"created_at", format_rfc3339(r.created_at)},
                      {"location", to_json(r.location)},
                      {"images", images},
                      {"water", to_json(r.water)},
                      {"environment", to_json(r.environment)},
                      {"submitter", r.submitter}};
  put_opt(j, "notes", r.notes);
  return j;
}

BoundingBox parse_bbox(const std::string& text) {
  std::vector<double> v;
  std::stringstream ss(text);
  std::string part;
  while (std::getline(ss, part, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(part, &used));
      if (used != part.size()) throw std::invalid_argument(part);
    } catch (const std::exception&) {
      fail_field(ErrorCode::kValidation, "bbox", "not a number: '" + part + "'");
    }
  }
  if (v.size() != 4) fail_field(ErrorCode::kValidation, "bbox", "expected minLon,minLat,maxLon,maxLat");
  BoundingBox b{v[0], v[1], v[2], v[3]};
  if (b.min_lon > b.max_lon || b.min_lat > b.max_lat) fail_field(ErrorCode::kValidation, "bbox", "min exceeds max");
  if (b.min_lat < -90 || b.max_lat > 90 || b.min_lon < -180 || b.max_lon > 180) {
    fail_field(ErrorCode::kValidation, "bbox", "outside valid coordinate ranges");
  }
  return b;
}

void ReportQuery::validate() const {
  if (from && to && *from > *to) fail_field(ErrorCode::kValidation, "from", "time range is inverted (from > to)");
}

ReportStore::ReportStore(const std::filesystem::path& db_path) {
  db_ = std::make_unique<db::Database>(db_path);
  db_->exec(R"sql(
CREATE TABLE IF NOT EXISTS reports (
  id TEXT PRIMARY KEY,
  created_at INTEGER NOT NULL,
  latitude REAL NOT NULL,
  longitude REAL NOT NULL,
  any_wssv INTEGER NOT NULL,
  any_healthy INTEGER NOT NULL,
  body TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS reports_created ON reports(created_at);
CREATE TABLE IF NOT EXISTS predictions (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  sample_id TEXT NOT NULL,
  at INTEGER NOT NULL,
  body TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS predictions_sample ON predictions(sample_id);
CREATE TRIGGER IF NOT EXISTS reports_immutable BEFORE UPDATE ON reports
BEGIN SELECT RAISE(ABORT, 'reports are immutable'); END;
)sql");
}

ReportStore::~ReportStore() = default;

void ReportStore::record_prediction(const std::string& sample_id, const inference::Prediction& p, Timestamp at) {
  std::lock_guard lock(mu_);
  db_->prepare("INSERT INTO predictions (sample_id, at, body) VALUES (?,?,?)")
      .bind(1, std::string_view(sample_id))
      .bind(2, to_ms(at))
      .bind(3, std::string_view(inference::to_json(p).dump()))
      .run();
}

std::optional<inference::Prediction> ReportStore::latest_prediction(const std::string& sample_id) const {
  std::lock_guard lock(mu_);
  auto st = db_->prepare("SELECT body FROM predictions WHERE sample_id = ? ORDER BY seq DESC LIMIT 1");
  st.bind(1, std::string_view(sample_id));
  if (!st.step()) return std::nullopt;
  return inference::prediction_from_json(nlohmann::json::parse(st.text(0)));
}

std::string ReportStore::insert(const ReportRecord& r) {
  bool any_wssv = false, any_healthy = false;
  for (const auto& img : r.images) {
    any_wssv = any_wssv || img.prediction.decision == inference::Decision::kWssv;
    any_healthy = any_healthy || img.prediction.decision == inference::Decision::kHealthy;
  }
  const std::string body = to_json(r).dump();
  std::lock_guard lock(mu_);
  db_->prepare("INSERT INTO reports (id, created_at, latitude, longitude, any_wssv, any_healthy, body) VALUES (?,?,?,?,?,?,?)")
      .bind(1, std::string_view(r.id))
      .bind(2, to_ms(r.created_at))
      .bind(3, r.location.latitude)
      .bind(4, r.location.longitude)
      .bind(5, std::int64_t{any_wssv})
      .bind(6, std::int64_t{any_healthy})
      .bind(7, std::string_view(body))
      .run();
  return body;
}

std::optional<std::string> ReportStore::fetch_json(const std::string& id) const {
  std::lock_guard lock(mu_);
  auto st = db_->prepare("SELECT body FROM reports WHERE id = ?");
  st.bind(1, std::string_view(id));
  if (!st.step()) return std::nullopt;
  return st.text(0);
}

std::vector<std::string> ReportStore::query_json(const ReportQuery& q) const {
  q.validate();
  std::string sql = "SELECT body FROM reports WHERE 1=1";
  if (q.from) sql += " AND created_at >= ?";
  if (q.to) sql += " AND created_at <= ?";
  if (q.bbox) sql += " AND longitude BETWEEN ? AND ? AND latitude BETWEEN ? AND ?";
  if (q.decision) sql += q.decision == inference::Decision::kWssv ? " AND any_wssv = 1" : " AND any_healthy = 1";
  sql += " ORDER BY created_at DESC, id DESC";
  std::lock_guard lock(mu_);
  auto st = db_->prepare(sql);
  int idx = 1;
  if (q.from) st.bind(idx++, to_ms(*q.from));
  if (q.to) st.bind(idx++, to_ms(*q.to));
  if (q.bbox) {
    st.bind(idx++, q.bbox->min_lon);
    st.bind(idx++, q.bbox->max_lon);
    st.bind(idx++, q.bbox->min_lat);
    st.bind(idx++, q.bbox->max_lat);
  }
  std::vector<std::string> out;
  while (st.step()) out.push_back(st.text(0));
  return out;
}

}  // namespace wssv::service
