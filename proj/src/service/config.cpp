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

#include "service/config.hpp"

#include <cstdlib>

#include "common/error.hpp"
#include "common/io.hpp"

namespace wssv::service {

void ServiceConfig::validate() const {
  if (port < 0 || port > 65535) fail_field(ErrorCode::kConfiguration, "listen", "port outside [0, 65535]");
  if (data_dir.empty()) fail_field(ErrorCode::kConfiguration, "data_dir", "must not be empty");
  if (!(default_threshold > 0.0 && default_threshold < 1.0)) {
    fail_field(ErrorCode::kConfiguration, "default_threshold", "must lie strictly inside (0, 1)");
  }
  if (max_upload_bytes == 0) fail_field(ErrorCode::kConfiguration, "max_upload_bytes", "must be > 0");
}

std::pair<std::string, int> parse_listen(const std::string& text) {
  const auto colon = text.rfind(':');
  if (colon == std::string::npos) fail_field(ErrorCode::kConfiguration, "listen", "expected host:port, got '" + text + "'");
  std::string host = text.substr(0, colon);
  if (host.size() >= 2 && host.front() == '[' && host.back() == ']') host = host.substr(1, host.size() - 2);
  if (host.empty()) host = "0.0.0.0";
  const std::string port_text = text.substr(colon + 1);
  int port = -1;
  try {
    std::size_t used = 0;
    port = std::stoi(port_text, &used);
    if (used != port_text.size()) port = -1;
  } catch (const std::exception&) {
  }
  if (port < 0 || port > 65535) fail_field(ErrorCode::kConfiguration, "listen", "bad port '" + port_text + "'");
  return {host, port};
}

std::optional<std::string> process_env(const char* name) {
  const char* v = std::getenv(name);
  if (!v) return std::nullopt;
  return std::string(v);
}

void apply_config_json(ServiceConfig& c, const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kConfiguration, "configuration must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    try {
      if (key == "listen") {
        std::tie(c.host, c.port) = parse_listen(value.get<std::string>());
      } else if (key == "data_dir") {
        c.data_dir = value.get<std::string>();
      } else if (key == "default_threshold") {
        c.default_threshold = value.get<double>();
      } else if (key == "occlusion") {
        c.occlusion = explain::occlusion_config_from_json(value);
      } else if (key == "max_upload_bytes") {
        c.max_upload_bytes = value.get<std::size_t>();
      } else {
        fail_field(ErrorCode::kConfiguration, key, "unknown configuration key");
      }
    } catch (const nlohmann::json::exception&) {
      fail_field(ErrorCode::kConfiguration, key, "wrong type");
    }
  }
}

ServiceConfig load_config(const std::optional<std::filesystem::path>& file, const EnvFn& env) {
  ServiceConfig c;
  if (file) {
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(read_text_file(*file));
    } catch (const nlohmann::json::exception& e) {
      fail(ErrorCode::kConfiguration, file->string() + ": " + e.what());
    }
    if (!j.is_object()) fail(ErrorCode::kConfiguration, file->string() + ": must be a JSON object");
    apply_config_json(c, j);
  }
  if (auto v = env("WSSV_LISTEN")) std::tie(c.host, c.port) = parse_listen(*v);
  if (auto v = env("WSSV_DATA_DIR")) c.data_dir = *v;
  if (auto v = env("WSSV_THRESHOLD")) {
    try {
      std::size_t used = 0;
      c.default_threshold = std::stod(*v, &used);
      if (used != v->size()) throw std::invalid_argument(*v);
    } catch (const std::exception&) {
      fail_field(ErrorCode::kConfiguration, "WSSV_THRESHOLD", "not a number: '" + *v + "'");
    }
  }
  c.validate();
  return c;
}

nlohmann::json to_json(const ServiceConfig& c) {
  return {{"listen", c.host + ":" + std::to_string(c.port)},
          {"data_dir", c.data_dir.string()},
          {"default_threshold", c.default_threshold},
          {"occlusion", {{"patch_side", c.occlusion.patch_side}, {"stride", c.occlusion.stride}}},
          {"max_upload_bytes", c.max_upload_bytes}};
}

}  // namespace wssv::service
