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

#include "service/registry.hpp"

#include "common/error.hpp"
#include "dataset/sqlite.hpp"

namespace wssv::service {

namespace {

constexpr std::size_t kIdLength = 16;

std::int64_t to_ms(Timestamp t) { return t.time_since_epoch().count(); }

RegistryEntry read_entry(const db::Statement& st) {
  RegistryEntry e;
  e.id = st.text(0);
  e.metadata = inference::metadata_from_json(nlohmann::json::parse(st.text(1)));
  e.checksum = st.text(2);
  e.uploaded_at = Timestamp(std::chrono::milliseconds(st.integer(3)));
  e.active = st.integer(4) != 0;
  return e;
}

}  // namespace

nlohmann::json to_json(const RegistryEntry& e) {
  return {{"id", e.id},
          {"model_id", e.metadata.name + "@" + e.metadata.version},
          {"checksum", e.checksum},
          {"uploaded_at", format_rfc3339(e.uploaded_at)},
          {"active", e.active},
          {"metadata", inference::to_json(e.metadata)}};
}

ModelRegistry::ModelRegistry(std::filesystem::path dir, const std::filesystem::path& db_path)
    : dir_(std::move(dir)), db_(std::make_unique<db::Database>(db_path)) {
  std::filesystem::create_directories(dir_);
  db_->exec(R"sql(
CREATE TABLE IF NOT EXISTS models (
  id TEXT PRIMARY KEY,
  metadata TEXT NOT NULL,
  checksum TEXT NOT NULL UNIQUE,
  uploaded_at INTEGER NOT NULL,
  active INTEGER NOT NULL DEFAULT 0 CHECK (active IN (0, 1))
);
CREATE UNIQUE INDEX IF NOT EXISTS models_one_active ON models(active) WHERE active = 1;
)sql");
  auto st = db_->prepare("SELECT id FROM models WHERE active = 1");
  if (st.step()) {
    const auto id = st.text(0);
    active_ = inference::load_model(inference::read_bundle(dir_ / id));
    active_id_ = id;
  }
}

ModelRegistry::~ModelRegistry() = default;

RegistryEntry ModelRegistry::upload(const inference::ModelBundle& bundle, Timestamp now) {
  auto handle = inference::load_model(bundle);  // integrity, contract and capability checks
  RegistryEntry e;
  e.id = bundle.checksum.substr(0, kIdLength);
  e.metadata = bundle.metadata;
  e.checksum = bundle.checksum;
  e.uploaded_at = now;

  std::lock_guard lock(write_mu_);
  {
    auto st = db_->prepare("SELECT id, metadata, checksum, uploaded_at, active FROM models WHERE id = ?");
    st.bind(1, std::string_view(e.id));
    if (st.step()) {
      auto existing = read_entry(st);
      if (existing.checksum != e.checksum) fail(ErrorCode::kConflict, "model id collision for " + e.id);
      return existing;
    }
  }
  const auto target = dir_ / e.id;
  const auto staging = dir_ / (e.id + ".partial");
  std::error_code ec;
  std::filesystem::remove_all(staging, ec);
  try {
    inference::write_bundle(bundle, staging);
    std::filesystem::remove_all(target, ec);
    std::filesystem::rename(staging, target);
    db::Transaction tx(*db_);
    db_->prepare("INSERT INTO models (id, metadata, checksum, uploaded_at, active) VALUES (?,?,?,?,0)")
        .bind(1, std::string_view(e.id))
        .bind(2, std::string_view(inference::to_json(e.metadata).dump()))
        .bind(3, std::string_view(e.checksum))
        .bind(4, to_ms(e.uploaded_at))
        .run();
    tx.commit();
  } catch (...) {
    std::filesystem::remove_all(staging, ec);
    std::filesystem::remove_all(target, ec);
    throw;
  }
  return e;
}

RegistryEntry ModelRegistry::activate(const std::string& id) {
  std::lock_guard lock(write_mu_);
  RegistryEntry e;
  {
    auto st = db_->prepare("SELECT id, metadata, checksum, uploaded_at, active FROM models WHERE id = ?");
    st.bind(1, std::string_view(id));
    if (!st.step()) fail(ErrorCode::kNotFound, "no model with id '" + id + "'");
    e = read_entry(st);
  }
  std::shared_ptr<const inference::ModelHandle> handle = inference::load_model(inference::read_bundle(dir_ / id));
  db::Transaction tx(*db_);
  db_->prepare("UPDATE models SET active = 0 WHERE active = 1 AND id <> ?").bind(1, std::string_view(id)).run();
  db_->prepare("UPDATE models SET active = 1 WHERE id = ?").bind(1, std::string_view(id)).run();
  tx.commit();
  {
    std::lock_guard hl(handle_mu_);
    active_ = std::move(handle);
    active_id_ = id;
  }
  e.active = true;
  return e;
}

std::vector<RegistryEntry> ModelRegistry::list() const {
  std::lock_guard lock(write_mu_);
  auto st = db_->prepare("SELECT id, metadata, checksum, uploaded_at, active FROM models ORDER BY uploaded_at, id");
  std::vector<RegistryEntry> out;
  while (st.step()) out.push_back(read_entry(st));
  return out;
}

std::shared_ptr<const inference::ModelHandle> ModelRegistry::active() const {
  std::lock_guard hl(handle_mu_);
  return active_;
}

std::optional<RegistryEntry> ModelRegistry::active_entry() const {
  std::string id;
  {
    std::lock_guard hl(handle_mu_);
    if (!active_) return std::nullopt;
    id = active_id_;
  }
  for (auto& e : list()) {
    if (e.id == id) return e;
  }
  return std::nullopt;
}

}  // namespace wssv::service
