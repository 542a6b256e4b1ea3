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

#include "service/http.hpp"

#include <cctype>

#include "httplib.h"

#include "common/error.hpp"
#include "common/io.hpp"

namespace wssv::service {

int http_status(ErrorCode code) {
  switch (code) {
    case ErrorCode::kOk: return 200;
    case ErrorCode::kInvalidArgument:
    case ErrorCode::kDecode:
    case ErrorCode::kBounds:
    case ErrorCode::kInput:
    case ErrorCode::kValidation: return 400;
    case ErrorCode::kNotFound: return 404;
    case ErrorCode::kConflict:
    case ErrorCode::kLeakage: return 409;
    case ErrorCode::kReference:
    case ErrorCode::kIntegrity:
    case ErrorCode::kConfiguration:
    case ErrorCode::kCapability:
    case ErrorCode::kStratification:
    case ErrorCode::kUndefinedMetric: return 422;
    case ErrorCode::kBusy: return 503;
    case ErrorCode::kModelContract:
    case ErrorCode::kNumeric:
    case ErrorCode::kBenchmark:
    case ErrorCode::kIo:
    case ErrorCode::kInternal: return 500;
  }
  return 500;
}

std::string error_body(ErrorCode code, const std::string& message, const std::string& field) {
  nlohmann::json e = {{"code", error_code_name(code)}, {"message", message}};
  e["field"] = field.empty() ? nlohmann::json(nullptr) : nlohmann::json(field);
  return nlohmann::json{{"error", e}}.dump();
}

namespace {

constexpr const char* kJson = "application/json";

std::optional<std::string> param(const httplib::Request& req, const char* key) {
  if (!req.has_param(key)) return std::nullopt;
  return req.get_param_value(key);
}

std::vector<std::uint8_t> bytes_of(const std::string& s) { return {s.begin(), s.end()}; }

const httplib::MultipartFormData& require_part(const httplib::Request& req, const char* name) {
  if (!req.is_multipart_form_data()) fail(ErrorCode::kValidation, "expected multipart/form-data");
  if (!req.has_file(name)) fail_field(ErrorCode::kValidation, name, "missing multipart part");
  return req.files.find(name)->second;
}

std::optional<std::string> optional_part(const httplib::Request& req, const char* name) {
  if (!req.is_multipart_form_data() || !req.has_file(name)) return std::nullopt;
  return req.files.find(name)->second.content;
}

dataset::SampleFilter sample_filter(const httplib::Request& req) {
  dataset::SampleFilter f;
  if (auto v = param(req, "label")) f.label = parse_label(*v);
  if (auto v = param(req, "split")) f.split = parse_split(*v);
  return f;
}

nlohmann::json body_json(const httplib::Request& req) {
  try {
    return nlohmann::json::parse(req.body);
  } catch (const nlohmann::json::exception& e) {
    fail(ErrorCode::kValidation, std::string("request body is not valid JSON: ") + e.what());
  }
}

bool flag(const std::optional<std::string>& v, const char* name) {
  if (!v || *v == "false" || *v == "0") return false;
  if (*v == "true" || *v == "1" || v->empty()) return true;
  fail_field(ErrorCode::kValidation, name, "expected true or false");
}

}  // namespace

struct HttpServer::Impl {
  SurveillanceService& svc;
  httplib::Server server;

  explicit Impl(SurveillanceService& s) : svc(s) {}

  using Handler = std::function<void(const httplib::Request&, httplib::Response&)>;

  // Maps domain errors to structured JSON responses.
  static httplib::Server::Handler guard(Handler h) {
    return [h = std::move(h)](const httplib::Request& req, httplib::Response& res) {
      try {
        h(req, res);
      } catch (const Error& e) {
        res.status = http_status(e.code());
        res.set_content(error_body(e.code(), e.what(), e.field()), kJson);
      } catch (const std::exception& e) {
        res.status = 500;
        res.set_content(error_body(ErrorCode::kInternal, e.what(), ""), kJson);
      }
    };
  }

  void routes() {
    auto& s = server;
    s.Get("/api/v1/health", guard([this](const httplib::Request&, httplib::Response& res) { res.set_content(svc.health().dump(), kJson); }));

    s.Post("/api/v1/predict", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& image = require_part(req, "image");
      const bool saliency = flag(param(req, "saliency"), "saliency");
      res.set_content(svc.predict(bytes_of(image.content), saliency, optional_part(req, "device_label")).dump(), kJson);
    }));

    s.Post("/api/v1/reports", guard([this](const httplib::Request& req, httplib::Response& res) {
      res.status = 201;
      res.set_content(svc.submit_report(body_json(req)), kJson);
    }));
    s.Get("/api/v1/reports", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto q = parse_report_query(param(req, "from"), param(req, "to"), param(req, "bbox"), param(req, "decision"));
      std::string body = "{\"reports\":[";
      bool first = true;
      for (const auto& r : svc.query_reports(q)) {
        if (!first) body += ",";
        body += r;
        first = false;
      }
      body += "]}";
      res.set_content(body, kJson);
    }));
    s.Get(R"(/api/v1/reports/([0-9A-Za-z_-]+))", guard([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(svc.get_report(req.matches[1]), kJson);
    }));

    s.Post("/api/v1/dataset/samples", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& image = require_part(req, "image");
      dataset::SampleMeta meta;
      meta.source = SampleSource::kWeb;
      if (auto v = optional_part(req, "source")) meta.source = parse_source(*v);
      if (auto v = optional_part(req, "captured_at")) meta.captured_at = parse_rfc3339(*v);
      meta.device_label = optional_part(req, "device_label");
      std::optional<Label> label;
      if (auto v = optional_part(req, "label")) label = parse_label(*v);
      const auto who = optional_part(req, "who").value_or("api");
      auto out = svc.add_sample(bytes_of(image.content), meta, label, who);
      res.status = out.at("created").get<bool>() ? 201 : 200;
      res.set_content(out.dump(), kJson);
    }));
    s.Get("/api/v1/dataset/samples", guard([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(svc.list_samples(sample_filter(req)).dump(), kJson);
    }));
    s.Get(R"(/api/v1/dataset/samples/([0-9a-f]{64}))", guard([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(dataset::to_json(svc.dataset().get(req.matches[1])).dump(), kJson);
    }));
    s.Get(R"(/api/v1/dataset/samples/([0-9a-f]{64})/image)", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto sample = svc.dataset().get(req.matches[1]);
      const auto bytes = svc.dataset().read_blob(sample.id);
      res.set_content(std::string(bytes.begin(), bytes.end()),
                      sample.image_ref.ends_with(".png") ? "image/png" : "image/jpeg");
    }));
    s.Put(R"(/api/v1/dataset/samples/([0-9a-f]{64})/label)", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto j = body_json(req);
      if (!j.is_object() || !j.contains("label") || !j.at("label").is_string()) {
        fail_field(ErrorCode::kValidation, "label", "required string");
      }
      const auto who = j.contains("who") && j.at("who").is_string() ? j.at("who").get<std::string>() : "api";
      res.set_content(svc.set_label(req.matches[1], parse_label(j.at("label").get<std::string>()), who).dump(), kJson);
    }));
    s.Get("/api/v1/dataset/export", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto part = param(req, "part").value_or("manifest");
      if (part != "manifest" && part != "archive") fail_field(ErrorCode::kValidation, "part", "manifest or archive");
      const auto bundle = svc.export_dataset(sample_filter(req));
      if (part == "manifest") {
        res.set_content(bundle.manifest_json, kJson);
      } else {
        res.set_header("Content-Disposition", "attachment; filename=\"dataset.tar\"");
        res.set_content(std::string(bundle.archive.begin(), bundle.archive.end()), "application/x-tar");
      }
    }));
    s.Post("/api/v1/dataset/import", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& manifest = require_part(req, "manifest");
      const auto& archive = require_part(req, "archive");
      res.set_content(svc.import_dataset(manifest.content, bytes_of(archive.content)).dump(), kJson);
    }));

    s.Get("/api/v1/models", guard([this](const httplib::Request&, httplib::Response& res) { res.set_content(svc.list_models().dump(), kJson); }));
    s.Post("/api/v1/models", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto& model = require_part(req, "model");
      const auto& metadata = require_part(req, "metadata");
      auto checksum = optional_part(req, "checksum");
      if (checksum) {
        while (!checksum->empty() && std::isspace(static_cast<unsigned char>(checksum->back()))) checksum->pop_back();
      }
      res.status = 201;
      res.set_content(svc.upload_model(bytes_of(model.content), metadata.content, checksum).dump(), kJson);
    }));
    s.Post(R"(/api/v1/models/([0-9a-f]+)/activate)", guard([this](const httplib::Request& req, httplib::Response& res) {
      res.set_content(svc.activate_model(req.matches[1]).dump(), kJson);
    }));

    s.Get(R"(/api/v1/overlays/([0-9a-f]{64}\.png))", guard([this](const httplib::Request& req, httplib::Response& res) {
      const auto bytes = read_file(svc.overlay_path(req.matches[1]));
      res.set_content(std::string(bytes.begin(), bytes.end()), "image/png");
    }));

    s.set_error_handler([](const httplib::Request&, httplib::Response& res) {
      if (!res.body.empty()) return;
      const auto code = res.status == 404 ? ErrorCode::kNotFound : ErrorCode::kInvalidArgument;
      res.set_content(error_body(code, "HTTP " + std::to_string(res.status), ""), kJson);
    });
  }
};

HttpServer::HttpServer(SurveillanceService& service) : impl_(std::make_unique<Impl>(service)) {
  impl_->server.set_payload_max_length(service.config().max_upload_bytes);
  impl_->routes();
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::bind(const std::string& host, int port) {
  int bound = -1;
  if (port == 0) bound = impl_->server.bind_to_any_port(host);
  else bound = impl_->server.bind_to_port(host, port) ? port : -1;
  if (bound < 0) fail(ErrorCode::kIo, "cannot bind " + host + ":" + std::to_string(port));
  return bound;
}

void HttpServer::listen() {
  if (!impl_->server.listen_after_bind()) fail(ErrorCode::kIo, "server stopped with an error");
}

void HttpServer::stop() {
  if (impl_ && impl_->server.is_running()) impl_->server.stop();
}

bool HttpServer::running() const { return impl_->server.is_running(); }

}  // namespace wssv::service
