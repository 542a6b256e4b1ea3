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
#include <functional>
#include <optional>
#include <string>

#include "json.hpp"

#include "explain/saliency.hpp"

namespace wssv::service {

struct ServiceConfig {
  std::string host = "127.0.0.1";
  int port = 8080;  // 0 picks a free port
  std::filesystem::path data_dir = "wssv-data";
  double default_threshold = 0.5;
  explain::OcclusionConfig occlusion;
  std::size_t max_upload_bytes = 64u << 20;

  void validate() const;
};

// "host:port" (host may be empty for all interfaces, or a bracketed IPv6).
std::pair<std::string, int> parse_listen(const std::string& text);

using EnvFn = std::function<std::optional<std::string>(const char*)>;
std::optional<std::string> process_env(const char* name);

// Optional JSON file with keys listen, data_dir, default_threshold,
// occlusion, max_upload_bytes; then WSSV_LISTEN, WSSV_DATA_DIR and
// WSSV_THRESHOLD override. Unknown keys are a configuration error.
ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvFn& env = process_env);

// Applies the keys of a config object onto `c` (same keys as the file).
void apply_config_json(ServiceConfig& c, const nlohmann::json& j);

nlohmann::json to_json(const ServiceConfig& c);

}  // namespace wssv::service
