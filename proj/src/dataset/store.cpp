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

#include "dataset/store.hpp"

#include <algorithm>
#include <map>
#include <set>

#include "common/error.hpp"
#include "common/hash.hpp"
#include "common/io.hpp"
#include "dataset/sqlite.hpp"
#include "dataset/tar.hpp"
#include "imaging/image.hpp"

namespace wssv::dataset {

namespace {

constexpr const char* kSchema = R"sql(
CREATE TABLE IF NOT EXISTS samples (
  id TEXT PRIMARY KEY,
  image_ref TEXT NOT NULL,
  label TEXT NOT NULL CHECK (label IN ('healthy','wssv','unlabeled')),
  split TEXT NOT NULL CHECK (split IN ('train','validation','test','unassigned')),
  source TEXT NOT NULL CHECK (source IN ('field_report','web','import')),
  captured_at INTEGER NOT NULL,
  device_label TEXT,
  augmentation_of TEXT,
  fold INTEGER,
  CHECK (augmentation_of IS NULL OR split IN ('train','unassigned'))
);
CREATE TABLE IF NOT EXISTS audit (
  seq INTEGER PRIMARY KEY AUTOINCREMENT,
  sample_id TEXT NOT NULL REFERENCES samples(id),
  who TEXT NOT NULL,
  at INTEGER NOT NULL,
  old_label TEXT NOT NULL,
  new_label TEXT NOT NULL
);
CREATE INDEX IF NOT EXISTS samples_origin ON samples(augmentation_of);
)sql";

constexpr const char* kColumns =
    "id, image_ref, label, split, source, captured_at, device_label, augmentation_of, fold";

std::int64_t to_ms(Timestamp t) { return t.time_since_epoch().count(); }
Timestamp from_ms(std::int64_t ms) { return Timestamp(std::chrono::milliseconds(ms)); }

ImageSample read_row(const db::Statement& st) {
  ImageSample s;
  s.id = st.text(0);
  s.image_ref = st.text(1);
  s.label = parse_label(st.text(2));
  s.split = parse_split(st.text(3));
  s.source = parse_source(st.text(4));
  s.captured_at = from_ms(st.integer(5));
  s.device_label = st.opt_text(6);
  s.augmentation_of = st.opt_text(7);
  if (auto f = st.opt_integer(8)) s.fold = static_cast<int>(*f);
  return s;
}

void check_id(const std::string& id) {
  const bool hex = id.size() == 64 && std::all_of(id.begin(), id.end(), [](char c) {
                     return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
                   });
  if (!hex) fail_field(ErrorCode::kValidation, "id", "not a SHA-256 hex digest: '" + id + "'");
}

std::string make_image_ref(const std::string& id, const std::string& ext) {
  return id.substr(0, 2) + "/" + id + "." + ext;
}

std::string leaf_name(const std::string& image_ref) {
  const auto slash = image_ref.rfind('/');
  return slash == std::string::npos ? image_ref : image_ref.substr(slash + 1);
}

LabelCounts tally(const std::vector<ImageSample>& samples) {
  LabelCounts c;
  for (const auto& s : samples) {
    switch (s.label) {
      case Label::kHealthy: ++c.healthy; break;
      case Label::kWssv: ++c.wssv; break;
      case Label::kUnlabeled: ++c.unlabeled; break;
    }
  }
  return c;
}

template <typename T>
std::optional<T> opt_field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail_field(ErrorCode::kValidation, key, "wrong type");
  }
}

std::string req_string(const nlohmann::json& j, const char* key) {
  auto v = opt_field<std::string>(j, key);
  if (!v) fail_field(ErrorCode::kValidation, key, "missing");
  return *v;
}

}  // namespace

nlohmann::json to_json(const ImageSample& s) {
  nlohmann::json j = {{"id", s.id},
                      {"image_ref", s.image_ref},
                      {"label", to_string(s.label)},
                      {"split", to_string(s.split)},
                      {"source", to_string(s.source)},
                      {"captured_at", format_rfc3339(s.captured_at)},
                      {"device_label", nullptr},
                      {"augmentation_of", nullptr},
                      {"fold", nullptr}};
  if (s.device_label) j["device_label"] = *s.device_label;
  if (s.augmentation_of) j["augmentation_of"] = *s.augmentation_of;
  if (s.fold) j["fold"] = *s.fold;
  return j;
}

ImageSample sample_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "sample must be a JSON object");
  ImageSample s;
  s.id = req_string(j, "id");
  check_id(s.id);
  s.image_ref = req_string(j, "image_ref");
  s.label = parse_label(req_string(j, "label"));
  s.split = parse_split(req_string(j, "split"));
  s.source = parse_source(req_string(j, "source"));
  s.captured_at = parse_rfc3339(req_string(j, "captured_at"));
  s.device_label = opt_field<std::string>(j, "device_label");
  s.augmentation_of = opt_field<std::string>(j, "augmentation_of");
  s.fold = opt_field<int>(j, "fold");
  if (s.augmentation_of && (s.split == Split::kValidation || s.split == Split::kTest)) {
    fail(ErrorCode::kLeakage, "augmented sample " + s.id + " cannot be in the " + std::string(to_string(s.split)) + " split");
  }
  return s;
}

nlohmann::json to_json(const DatasetManifest& m) {
  nlohmann::json samples = nlohmann::json::array();
  for (const auto& s : m.samples) samples.push_back(to_json(s));
  return {{"schema_version", m.schema_version},
          {"created_at", format_rfc3339(m.created_at)},
          {"counts", {{"healthy", m.counts.healthy}, {"wssv", m.counts.wssv}, {"unlabeled", m.counts.unlabeled}}},
          {"samples", samples}};
}

DatasetManifest manifest_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "manifest must be a JSON object");
  DatasetManifest m;
  m.schema_version = req_string(j, "schema_version");
  if (m.schema_version != kSchemaVersion) {
    fail_field(ErrorCode::kValidation, "schema_version", "unsupported version '" + m.schema_version + "'");
  }
  m.created_at = parse_rfc3339(req_string(j, "created_at"));
  if (!j.contains("samples") || !j.at("samples").is_array()) fail_field(ErrorCode::kValidation, "samples", "missing");
  std::set<std::string> ids;
  for (std::size_t i = 0; i < j.at("samples").size(); ++i) {
    try {
      m.samples.push_back(sample_from_json(j.at("samples")[i]));
    } catch (const Error& e) {
      fail(e.code(), "samples[" + std::to_string(i) + "]: " + e.what());
    }
    if (!ids.insert(m.samples.back().id).second) {
      fail(ErrorCode::kValidation, "samples[" + std::to_string(i) + "]: duplicate id");
    }
  }
  const auto& c = j.contains("counts") ? j.at("counts") : nlohmann::json();
  try {
    m.counts = {c.at("healthy").get<std::size_t>(), c.at("wssv").get<std::size_t>(), c.at("unlabeled").get<std::size_t>()};
  } catch (const nlohmann::json::exception&) {
    fail_field(ErrorCode::kValidation, "counts", "needs healthy, wssv and unlabeled totals");
  }
  if (!(m.counts == tally(m.samples))) fail_field(ErrorCode::kIntegrity, "counts", "do not match the sample records");
  std::sort(m.samples.begin(), m.samples.end(), [](const auto& a, const auto& b) { return a.id < b.id; });
  return m;
}

nlohmann::json to_json(const AuditEntry& a) {
  return {{"sample_id", a.sample_id},
          {"who", a.who},
          {"at", format_rfc3339(a.at)},
          {"old_label", to_string(a.old_label)},
          {"new_label", to_string(a.new_label)}};
}

std::string dump_manifest(const DatasetManifest& m) { return to_json(m).dump(2) + "\n"; }

DatasetStore::DatasetStore(const std::filesystem::path& root, Clock clock) : root_(root), clock_(std::move(clock)) {
  std::error_code ec;
  std::filesystem::create_directories(root_ / "blobs", ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + (root_ / "blobs").string() + ": " + ec.message());
  db_ = std::make_unique<db::Database>(root_ / "dataset.db");
  db_->exec(kSchema);
}

DatasetStore::~DatasetStore() = default;

std::filesystem::path DatasetStore::blob_path(const std::string& image_ref) const { return root_ / "blobs" / image_ref; }

bool DatasetStore::put_blob(const std::string& image_ref, const std::vector<std::uint8_t>& bytes) {
  const auto path = blob_path(image_ref);
  if (std::filesystem::exists(path)) return false;
  std::error_code ec;
  std::filesystem::create_directories(path.parent_path(), ec);
  if (ec) fail(ErrorCode::kIo, "cannot create " + path.parent_path().string());
  write_file_atomic(path, std::span<const std::uint8_t>(bytes));
  return true;
}

void DatasetStore::insert_record(const ImageSample& s) {
  auto st = db_->prepare(std::string("INSERT INTO samples (") + kColumns + ") VALUES (?,?,?,?,?,?,?,?,?)");
  st.bind(1, std::string_view(s.id))
      .bind(2, std::string_view(s.image_ref))
      .bind(3, to_string(s.label))
      .bind(4, to_string(s.split))
      .bind(5, to_string(s.source))
      .bind(6, to_ms(s.captured_at))
      .bind(7, s.device_label)
      .bind(8, s.augmentation_of)
      .bind(9, s.fold ? std::optional<std::int64_t>(*s.fold) : std::nullopt);
  st.run();
}

std::optional<ImageSample> DatasetStore::find_locked(const std::string& id) const {
  auto st = db_->prepare(std::string("SELECT ") + kColumns + " FROM samples WHERE id = ?");
  st.bind(1, std::string_view(id));
  if (!st.step()) return std::nullopt;
  return read_row(st);
}

std::pair<ImageSample, bool> DatasetStore::add_sample_ex(const std::vector<std::uint8_t>& bytes,
                                                         const SampleMeta& meta) {
  const auto ext = imaging::sniff_extension(bytes);
  imaging::decode_image(bytes);  // rejects corrupt data before anything is stored
  const auto id = sha256_hex(bytes);

  std::lock_guard lock(mu_);
  if (auto existing = find_locked(id)) return {*existing, false};
  ImageSample s;
  s.id = id;
  s.image_ref = make_image_ref(id, ext);
  s.source = meta.source;
  s.captured_at = meta.captured_at ? *meta.captured_at : clock_();
  s.device_label = meta.device_label;
  const bool created = put_blob(s.image_ref, bytes);
  try {
    db::Transaction tx(*db_);
    insert_record(s);
    tx.commit();
  } catch (...) {
    std::error_code ec;
    if (created) std::filesystem::remove(blob_path(s.image_ref), ec);
    throw;
  }
  return {s, true};
}

ImageSample DatasetStore::add_sample(const std::vector<std::uint8_t>& bytes, const SampleMeta& meta) {
  return add_sample_ex(bytes, meta).first;
}

ImageSample DatasetStore::set_label(const std::string& id, Label label, const std::string& who) {
  std::lock_guard lock(mu_);
  db::Transaction tx(*db_);
  auto current = find_locked(id);
  if (!current) fail(ErrorCode::kNotFound, "no sample with id '" + id + "'");
  if (current->label == label) return *current;
  db_->prepare("UPDATE samples SET label = ? WHERE id = ?").bind(1, to_string(label)).bind(2, std::string_view(id)).run();
  db_->prepare("INSERT INTO audit (sample_id, who, at, old_label, new_label) VALUES (?,?,?,?,?)")
      .bind(1, std::string_view(id))
      .bind(2, std::string_view(who))
      .bind(3, to_ms(clock_()))
      .bind(4, to_string(current->label))
      .bind(5, to_string(label))
      .run();
  tx.commit();
  current->label = label;
  return *current;
}

namespace {

struct SplitUpdate {
  Split split;
  std::optional<int> fold;
  bool touch_split;
  bool touch_fold;
};

}  // namespace

// Shared body of both assign_splits overloads.
static std::size_t apply_updates(db::Database& db, const std::map<std::string, SplitUpdate>& updates,
                                 const std::function<std::optional<ImageSample>(const std::string&)>& find) {
  db::Transaction tx(db);
  std::vector<std::pair<std::string, SplitUpdate>> effective;
  for (const auto& [id, u] : updates) {
    auto s = find(id);
    if (!s) fail(ErrorCode::kNotFound, "plan references unknown sample '" + id + "'");
    if (s->label == Label::kUnlabeled) fail_field(ErrorCode::kValidation, "plan", "sample '" + id + "' is unlabeled");
    const bool held_out = u.touch_split && (u.split == Split::kValidation || u.split == Split::kTest);
    if (held_out && s->augmentation_of) {
      fail(ErrorCode::kLeakage, "augmented sample '" + id + "' cannot enter the " + std::string(to_string(u.split)) + " split");
    }
    if (held_out) {
      auto st = db.prepare("SELECT COUNT(*) FROM samples WHERE augmentation_of = ?");
      st.bind(1, std::string_view(id));
      st.step();
      if (st.integer(0) > 0) {
        fail(ErrorCode::kLeakage, "sample '" + id + "' has augmented copies in training and cannot enter the " +
                                      std::string(to_string(u.split)) + " split");
      }
    }
    const bool split_changes = u.touch_split && s->split != u.split;
    const bool fold_changes = u.touch_fold && s->fold != u.fold;
    if (split_changes || fold_changes) {
      SplitUpdate eff = u;
      if (!u.touch_split) eff.split = s->split;
      if (!u.touch_fold) eff.fold = s->fold;
      effective.emplace_back(id, eff);
    }
  }
  for (const auto& [id, u] : effective) {
    db.prepare("UPDATE samples SET split = ?, fold = ? WHERE id = ?")
        .bind(1, to_string(u.split))
        .bind(2, u.fold ? std::optional<std::int64_t>(*u.fold) : std::nullopt)
        .bind(3, std::string_view(id))
        .run();
  }
  tx.commit();
  return effective.size();
}

std::size_t DatasetStore::assign_splits(const eval::SplitAssignment& plan) {
  plan.validate();
  std::map<std::string, SplitUpdate> updates;
  for (const auto& id : plan.train_ids) updates[id] = {Split::kTrain, std::nullopt, true, false};
  for (const auto& id : plan.test_ids) updates[id] = {Split::kTest, std::nullopt, true, true};
  std::lock_guard lock(mu_);
  return apply_updates(*db_, updates, [this](const std::string& id) { return find_locked(id); });
}

std::size_t DatasetStore::assign_splits(const eval::FoldPlan& plan, std::optional<int> validation_fold) {
  plan.validate();
  if (validation_fold && (*validation_fold < 0 || *validation_fold >= plan.k)) {
    fail_field(ErrorCode::kValidation, "validation_fold", "outside [0, k)");
  }
  std::map<std::string, SplitUpdate> updates;
  for (const auto& [id, fold] : plan.assignments) {
    const Split split = validation_fold && fold == *validation_fold ? Split::kValidation : Split::kTrain;
    updates[id] = {split, fold, validation_fold.has_value(), true};
  }
  std::lock_guard lock(mu_);
  return apply_updates(*db_, updates, [this](const std::string& id) { return find_locked(id); });
}

ImageSample DatasetStore::add_augmented(const imaging::LabeledImage& copy) {
  auto s = copy.record;
  if (!s.augmentation_of) fail_field(ErrorCode::kValidation, "augmentation_of", "required for augmented samples");
  if (s.split == Split::kValidation || s.split == Split::kTest) {
    fail(ErrorCode::kLeakage, "augmented sample cannot be stored in the " + std::string(to_string(s.split)) + " split");
  }
  if (copy.encoded.empty()) fail(ErrorCode::kInput, "augmented sample has no encoded bytes");
  s.id = sha256_hex(copy.encoded);
  s.image_ref = make_image_ref(s.id, imaging::sniff_extension(copy.encoded));
  s.fold.reset();

  std::lock_guard lock(mu_);
  auto origin = find_locked(*s.augmentation_of);
  if (!origin) fail(ErrorCode::kReference, "augmentation origin '" + *s.augmentation_of + "' not in store");
  if (origin->split == Split::kValidation || origin->split == Split::kTest) {
    fail(ErrorCode::kLeakage, "origin '" + origin->id + "' is in the " + std::string(to_string(origin->split)) + " split");
  }
  if (auto existing = find_locked(s.id)) return *existing;
  const bool created = put_blob(s.image_ref, copy.encoded);
  try {
    db::Transaction tx(*db_);
    insert_record(s);
    tx.commit();
  } catch (...) {
    std::error_code ec;
    if (created) std::filesystem::remove(blob_path(s.image_ref), ec);
    throw;
  }
  return s;
}

std::vector<ImageSample> DatasetStore::expand_training(const std::vector<imaging::AugmentSpec>& specs,
                                                       std::uint64_t seed) {
  std::vector<imaging::LabeledImage> originals;
  for (const auto& s : list({std::nullopt, Split::kTrain})) {
    if (s.augmentation_of || s.label == Label::kUnlabeled) continue;
    imaging::LabeledImage li;
    li.record = s;
    li.image = imaging::decode_image(read_blob(s.id));
    originals.push_back(std::move(li));
  }
  const auto expanded = imaging::expand_training_set(originals, specs, seed);
  std::vector<ImageSample> created;
  std::set<std::string> seen;
  for (std::size_t i = originals.size(); i < expanded.size(); ++i) {
    const auto& copy = expanded[i];
    if (find(copy.record.id) || !seen.insert(copy.record.id).second) continue;  // identity transforms
    created.push_back(add_augmented(copy));
  }
  return created;
}

std::optional<ImageSample> DatasetStore::find(const std::string& id) const {
  std::lock_guard lock(mu_);
  return find_locked(id);
}

ImageSample DatasetStore::get(const std::string& id) const {
  auto s = find(id);
  if (!s) fail(ErrorCode::kNotFound, "no sample with id '" + id + "'");
  return *s;
}

std::vector<ImageSample> DatasetStore::list(const SampleFilter& filter) const {
  std::string sql = std::string("SELECT ") + kColumns + " FROM samples WHERE 1=1";
  if (filter.label) sql += " AND label = ?";
  if (filter.split) sql += " AND split = ?";
  sql += " ORDER BY id";
  std::lock_guard lock(mu_);
  auto st = db_->prepare(sql);
  int idx = 1;
  if (filter.label) st.bind(idx++, to_string(*filter.label));
  if (filter.split) st.bind(idx++, to_string(*filter.split));
  std::vector<ImageSample> out;
  while (st.step()) out.push_back(read_row(st));
  return out;
}

std::vector<std::uint8_t> DatasetStore::read_blob(const std::string& id) const {
  const auto s = get(id);
  auto bytes = read_file(blob_path(s.image_ref));
  if (sha256_hex(bytes) != id) fail(ErrorCode::kIntegrity, "blob for '" + id + "' does not match its id");
  return bytes;
}

std::vector<AuditEntry> DatasetStore::audit(const std::string& id) const {
  std::lock_guard lock(mu_);
  if (!find_locked(id)) fail(ErrorCode::kNotFound, "no sample with id '" + id + "'");
  auto st = db_->prepare("SELECT sample_id, who, at, old_label, new_label FROM audit WHERE sample_id = ? ORDER BY seq");
  st.bind(1, std::string_view(id));
  std::vector<AuditEntry> out;
  while (st.step()) {
    out.push_back({st.text(0), st.text(1), from_ms(st.integer(2)), parse_label(st.text(3)), parse_label(st.text(4))});
  }
  return out;
}

DatasetManifest DatasetStore::manifest(const SampleFilter& filter, Timestamp created_at) const {
  DatasetManifest m;
  m.samples = list(filter);
  m.counts = tally(m.samples);
  m.created_at = created_at;
  return m;
}

ExportBundle DatasetStore::export_bundle(const SampleFilter& filter, Timestamp created_at) const {
  const auto m = manifest(filter, created_at);
  // Re-derive the counts from the serialized form so a drift between the
  // records and the tallies can never leave the store.
  ExportBundle out;
  out.manifest_json = dump_manifest(m);
  const auto check = manifest_from_json(nlohmann::json::parse(out.manifest_json));
  if (!(check.counts == m.counts) || check.samples.size() != m.samples.size()) {
    fail(ErrorCode::kInternal, "manifest counts drifted during export");
  }
  std::vector<TarEntry> entries;
  entries.reserve(m.samples.size());
  for (const auto& s : m.samples) {
    entries.push_back({leaf_name(s.image_ref), read_blob(s.id),
                       std::chrono::duration_cast<std::chrono::seconds>(s.captured_at.time_since_epoch()).count()});
  }
  out.archive = write_tar(entries);
  return out;
}

std::size_t DatasetStore::import_bundle(const std::string& manifest_json, const std::vector<std::uint8_t>& archive) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(manifest_json);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kInput, std::string("manifest is not valid JSON: ") + e.what());
  }
  const auto m = manifest_from_json(j);
  std::map<std::string, std::vector<std::uint8_t>> blobs;
  for (auto& e : read_tar(archive)) {
    if (!blobs.emplace(e.name, std::move(e.data)).second) fail(ErrorCode::kInput, "archive repeats entry '" + e.name + "'");
  }
  std::set<std::string> referenced;
  for (const auto& s : m.samples) {
    const auto name = leaf_name(s.image_ref);
    auto it = blobs.find(name);
    if (it == blobs.end()) fail(ErrorCode::kInput, "archive lacks blob '" + name + "' for sample " + s.id);
    if (sha256_hex(it->second) != s.id) fail(ErrorCode::kIntegrity, "blob '" + name + "' does not hash to its id");
    if (s.image_ref != make_image_ref(s.id, imaging::sniff_extension(it->second))) {
      fail_field(ErrorCode::kValidation, "image_ref", "unexpected blob reference '" + s.image_ref + "'");
    }
    imaging::decode_image(it->second);
    referenced.insert(name);
  }
  if (referenced.size() != blobs.size()) fail(ErrorCode::kInput, "archive contains blobs not listed in the manifest");

  std::lock_guard lock(mu_);
  std::vector<std::filesystem::path> written;
  try {
    db::Transaction tx(*db_);
    std::size_t created = 0;
    for (const auto& s : m.samples) {
      if (auto existing = find_locked(s.id)) {
        if (!(*existing == s)) fail(ErrorCode::kConflict, "sample " + s.id + " already exists with different fields");
        continue;
      }
      if (put_blob(s.image_ref, blobs.at(leaf_name(s.image_ref)))) written.push_back(blob_path(s.image_ref));
      insert_record(s);
      ++created;
    }
    tx.commit();
    return created;
  } catch (...) {
    std::error_code ec;
    for (const auto& p : written) std::filesystem::remove(p, ec);
    throw;
  }
}

}  // namespace wssv::dataset
