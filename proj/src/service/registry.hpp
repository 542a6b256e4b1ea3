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

struct RegistryEntry {
  std::string id;  // first 16 hex digits of the model checksum
  inference::ModelMetadata metadata;
  std::string checksum;
  Timestamp uploaded_at{};
  bool active = false;
};

nlohmann::json to_json(const RegistryEntry& e);

// Bundles under <dir>/<id>/, state in a `models` table of the database at
// `db_path` (own connection). Once any model
// has been activated exactly one entry is active; activation swaps the
// in-memory handle atomically, and in-flight predictions keep the handle
// they started with.
class ModelRegistry {
 public:
  ModelRegistry(std::filesystem::path dir, const std::filesystem::path& db_path);
  ~ModelRegistry();

  // Validates with load_model first; nothing is registered on failure.
  // Re-uploading an identical bundle returns the existing entry.
  RegistryEntry upload(const inference::ModelBundle& bundle, Timestamp now);
  RegistryEntry activate(const std::string& id);
  std::vector<RegistryEntry> list() const;

  // nullptr when no model is active.
  std::shared_ptr<const inference::ModelHandle> active() const;
  std::optional<RegistryEntry> active_entry() const;

 private:
  std::filesystem::path dir_;
  std::unique_ptr<db::Database> db_;
  mutable std::mutex write_mu_;  // serializes upload/activate
  mutable std::mutex handle_mu_;
  std::shared_ptr<const inference::ModelHandle> active_;
  std::string active_id_;
};

}  // namespace wssv::service
