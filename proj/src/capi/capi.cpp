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

#include "wssv/wssv.h"

#include <cstdlib>
#include <cstring>
#include <memory>
#include <new>
#include <string>
#include <thread>

#include "common/error.hpp"
#include "common/io.hpp"
#include "common/time.hpp"
#include "dataset/store.hpp"
#include "eval/metrics.hpp"
#include "eval/splits.hpp"
#include "explain/saliency.hpp"
#include "imaging/augment.hpp"
#include "imaging/image.hpp"
#include "inference/engine.hpp"
#include "qa/latency.hpp"
#include "qa/parity.hpp"
#include "service/http.hpp"
#include "service/service.hpp"

using wssv::ErrorCode;
using nlohmann::json;

struct wssv_image {
  wssv::imaging::ImageTensor tensor;
};

struct wssv_model {
  std::shared_ptr<wssv::inference::ModelHandle> handle;
};

struct wssv_store {
  std::unique_ptr<wssv::dataset::DatasetStore> store;
};

struct wssv_server {
  std::unique_ptr<wssv::service::SurveillanceService> service;
  std::unique_ptr<wssv::service::HttpServer> http;
};

namespace {

thread_local std::string g_error;
thread_local std::string g_field;

int record(ErrorCode code, const std::string& message, const std::string& field = {}) {
  g_error = message;
  g_field = field;
  return static_cast<int>(code);
}

template <typename F>
int guarded(F&& body) {
  try {
    g_error.clear();
    g_field.clear();
    body();
    return WSSV_OK;
  } catch (const wssv::Error& e) {
    return record(e.code(), e.what(), e.field());
  } catch (const json::exception& e) {
    return record(ErrorCode::kValidation, std::string("json: ") + e.what());
  } catch (const std::bad_alloc&) {
    return record(ErrorCode::kInternal, "out of memory");
  } catch (const std::exception& e) {
    return record(ErrorCode::kInternal, e.what());
  } catch (...) {
    return record(ErrorCode::kInternal, "unknown exception");
  }
}

void require(const void* p, const char* name) {
  if (p == nullptr) wssv::fail_field(ErrorCode::kInvalidArgument, name, "must not be NULL");
}

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

uint8_t* dup_buffer(const std::vector<std::uint8_t>& v) {
  auto* out = static_cast<uint8_t*>(std::malloc(v.empty() ? 1 : v.size()));
  if (!out) throw std::bad_alloc();
  if (!v.empty()) std::memcpy(out, v.data(), v.size());
  return out;
}

json parse_json(const char* text, const char* name) {
  require(text, name);
  try {
    return json::parse(text);
  } catch (const json::exception& e) {
    wssv::fail_field(ErrorCode::kValidation, name, std::string("not valid JSON: ") + e.what());
  }
}

std::vector<std::uint8_t> to_bytes(const uint8_t* data, size_t len) {
  if (len > 0) require(data, "data");
  return {data, data + len};
}

wssv::dataset::SampleFilter filter_of(const char* label, const char* split) {
  wssv::dataset::SampleFilter f;
  if (label) f.label = wssv::parse_label(label);
  if (split) f.split = wssv::parse_split(split);
  return f;
}

}  // namespace

extern "C" {

const char* wssv_version(void) { return WSSV_VERSION; }

const char* wssv_status_name(int status) {
  if (status < 0 || status > static_cast<int>(ErrorCode::kInternal)) return "unknown";
  return wssv::error_code_name(static_cast<ErrorCode>(status)).data();
}

const char* wssv_last_error(void) { return g_error.c_str(); }
const char* wssv_last_error_field(void) { return g_field.c_str(); }
void wssv_free_string(char* s) { std::free(s); }
void wssv_free_buffer(uint8_t* buf) { std::free(buf); }

int wssv_image_decode(const uint8_t* data, size_t len, wssv_image** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto img = std::make_unique<wssv_image>();
    img->tensor = wssv::imaging::decode_image(to_bytes(data, len));
    *out = img.release();
  });
}

int wssv_image_read_file(const char* path, wssv_image** out) {
  return guarded([&] {
    require(path, "path");
    require(out, "out");
    *out = nullptr;
    auto img = std::make_unique<wssv_image>();
    img->tensor = wssv::imaging::decode_image(wssv::read_file(path));
    *out = img.release();
  });
}

int wssv_image_size(const wssv_image* img, int* width, int* height) {
  return guarded([&] {
    require(img, "img");
    if (width) *width = img->tensor.width;
    if (height) *height = img->tensor.height;
  });
}

int wssv_image_encode_png(const wssv_image* img, uint8_t** out, size_t* out_len) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    require(out_len, "out_len");
    const auto png = wssv::imaging::encode_png(img->tensor);
    *out = dup_buffer(png);
    *out_len = png.size();
  });
}

int wssv_image_augment(const wssv_image* img, const char* spec_json, uint64_t seed, wssv_image** out) {
  return guarded([&] {
    require(img, "img");
    require(out, "out");
    *out = nullptr;
    const auto spec = wssv::imaging::augment_spec_from_json(parse_json(spec_json, "spec_json"));
    auto result = std::make_unique<wssv_image>();
    result->tensor = wssv::imaging::augment(img->tensor, spec, seed);
    *out = result.release();
  });
}

int wssv_augment_sample_spec(const char* ranges_json, uint64_t seed, char** spec_json) {
  return guarded([&] {
    require(spec_json, "spec_json");
    wssv::imaging::AugmentRanges r;
    if (ranges_json) {
      const auto j = parse_json(ranges_json, "ranges_json");
      r.max_rotation_degrees = j.value("max_rotation_degrees", r.max_rotation_degrees);
      r.allow_flip_horizontal = j.value("allow_flip_horizontal", r.allow_flip_horizontal);
      r.allow_flip_vertical = j.value("allow_flip_vertical", r.allow_flip_vertical);
      r.max_brightness_delta = j.value("max_brightness_delta", r.max_brightness_delta);
      r.max_blur_sigma = j.value("max_blur_sigma", r.max_blur_sigma);
    }
    *spec_json = dup_string(wssv::imaging::to_json(wssv::imaging::sample_augment_spec(r, seed)).dump());
  });
}

void wssv_image_free(wssv_image* img) { delete img; }

int wssv_model_load_dir(const char* dir, double default_threshold, wssv_model** out) {
  return guarded([&] {
    require(dir, "dir");
    require(out, "out");
    *out = nullptr;
    auto m = std::make_unique<wssv_model>();
    m->handle = wssv::inference::load_model(wssv::inference::read_bundle(dir, default_threshold));
    *out = m.release();
  });
}

int wssv_model_info(const wssv_model* model, char** info_json) {
  return guarded([&] {
    require(model, "model");
    require(info_json, "info_json");
    const auto& h = *model->handle;
    json j = {{"model_id", h.model_id()}, {"checksum", h.checksum()}, {"metadata", wssv::inference::to_json(h.metadata())}};
    *info_json = dup_string(j.dump());
  });
}

int wssv_model_predict(const wssv_model* model, const wssv_image* img, char** prediction_json) {
  return guarded([&] {
    require(model, "model");
    require(img, "img");
    require(prediction_json, "prediction_json");
    const auto& h = *model->handle;
    const auto input = wssv::imaging::preprocess(img->tensor, h.metadata().preprocess_config());
    *prediction_json = dup_string(wssv::inference::to_json(h.predict(input)).dump());
  });
}

int wssv_model_predict_batch(const wssv_model* model, const wssv_image* const* imgs, size_t count,
                             char** predictions_json) {
  return guarded([&] {
    require(model, "model");
    require(predictions_json, "predictions_json");
    if (count > 0) require(imgs, "imgs");
    const auto& h = *model->handle;
    std::vector<wssv::imaging::ModelInput> inputs;
    inputs.reserve(count);
    for (size_t i = 0; i < count; ++i) {
      if (!imgs[i]) wssv::fail_field(ErrorCode::kInvalidArgument, "imgs[" + std::to_string(i) + "]", "must not be NULL");
      inputs.push_back(wssv::imaging::preprocess(imgs[i]->tensor, h.metadata().preprocess_config()));
    }
    json arr = json::array();
    for (const auto& p : h.predict_batch(inputs)) arr.push_back(wssv::inference::to_json(p));
    *predictions_json = dup_string(arr.dump());
  });
}

int wssv_model_saliency(const wssv_model* model, const wssv_image* img, const char* occlusion_json, char** map_json,
                        uint8_t** overlay_png, size_t* overlay_len) {
  return guarded([&] {
    require(model, "model");
    require(img, "img");
    require(map_json, "map_json");
    if (overlay_png) require(overlay_len, "overlay_len");
    const auto cfg = occlusion_json ? wssv::explain::occlusion_config_from_json(parse_json(occlusion_json, "occlusion_json"))
                                    : wssv::explain::OcclusionConfig{};
    const auto& h = *model->handle;
    const auto pcfg = h.metadata().preprocess_config();
    const auto input = wssv::imaging::preprocess(img->tensor, pcfg);
    const auto map = wssv::explain::occlusion_saliency(h, input, cfg);
    std::vector<std::uint8_t> png;
    if (overlay_png) {
      png = wssv::imaging::encode_png(wssv::explain::render_overlay(map, wssv::imaging::crop_and_resize(img->tensor, pcfg)));
    }
    char* text = dup_string(wssv::explain::to_json(map).dump());
    if (overlay_png) {
      try {
        *overlay_png = dup_buffer(png);
      } catch (...) {
        std::free(text);
        throw;
      }
      *overlay_len = png.size();
    }
    *map_json = text;
  });
}

int wssv_model_benchmark(const wssv_model* model, const wssv_image* img, size_t runs, size_t warmup,
                         const char* device_label, char** stats_json) {
  return guarded([&] {
    require(model, "model");
    require(img, "img");
    require(stats_json, "stats_json");
    const auto& h = *model->handle;
    const auto input = wssv::imaging::preprocess(img->tensor, h.metadata().preprocess_config());
    const auto stats = wssv::qa::benchmark_latency(h, input, runs, warmup, wssv::qa::steady_clock_ms(),
                                                   device_label ? device_label : "cpu");
    *stats_json = dup_string(wssv::qa::to_json(stats).dump());
  });
}

void wssv_model_free(wssv_model* model) { delete model; }

int wssv_eval_kfold(const char* labels_json, int k, int64_t seed, char** plan_json) {
  return guarded([&] {
    require(plan_json, "plan_json");
    const auto labels = wssv::eval::class_labels_from_json(parse_json(labels_json, "labels_json"));
    *plan_json = dup_string(wssv::eval::to_json(wssv::eval::stratified_kfold(labels, k, seed)).dump(2));
  });
}

int wssv_eval_holdout(const char* labels_json, double fraction, int64_t seed, char** split_json) {
  return guarded([&] {
    require(split_json, "split_json");
    const auto labels = wssv::eval::class_labels_from_json(parse_json(labels_json, "labels_json"));
    *split_json = dup_string(wssv::eval::to_json(wssv::eval::stratified_holdout(labels, fraction, seed)).dump(2));
  });
}

int wssv_eval_run_csv(const char* const* fold_csvs, size_t count, const char* plan_json, double threshold,
                      char** summary_json) {
  return guarded([&] {
    require(summary_json, "summary_json");
    if (count == 0) wssv::fail(ErrorCode::kInput, "no fold score files");
    require(fold_csvs, "fold_csvs");
    wssv::eval::FoldPlan plan;
    if (plan_json) {
      plan = wssv::eval::fold_plan_from_json(parse_json(plan_json, "plan_json"));
    } else {
      plan.k = static_cast<int>(count);
    }
    std::map<int, std::vector<wssv::eval::LabeledScore>> scores;
    for (size_t i = 0; i < count; ++i) {
      require(fold_csvs[i], "fold_csvs[i]");
      try {
        scores[static_cast<int>(i)] = wssv::eval::read_labeled_scores_csv(fold_csvs[i]);
      } catch (const wssv::Error& e) {
        wssv::fail(e.code(), "fold " + std::to_string(i) + ": " + e.what());
      }
    }
    if (plan_json) {
      // Scored ids must belong to the fold the plan puts them in.
      for (const auto& [fold, items] : scores) {
        for (const auto& it : items) {
          auto a = plan.assignments.find(it.sample_id);
          if (a == plan.assignments.end() || a->second != fold) {
            wssv::fail(ErrorCode::kInput, "fold " + std::to_string(fold) + ": sample '" + it.sample_id +
                                              "' is not assigned to this fold by the plan");
          }
        }
      }
    }
    *summary_json = dup_string(wssv::eval::to_json(wssv::eval::evaluate_run(plan, scores, threshold)).dump(2));
  });
}

int wssv_eval_format_table(const char* summary_json, char** table_text) {
  return guarded([&] {
    require(table_text, "table_text");
    const auto s = wssv::eval::metrics_summary_from_json(parse_json(summary_json, "summary_json"));
    *table_text = dup_string(wssv::eval::format_table(s));
  });
}

int wssv_parity_csv(const char* reference_csv, const char* candidate_csv, double max_tolerance, double mean_tolerance,
                    int* passed, char** report_json) {
  return guarded([&] {
    require(reference_csv, "reference_csv");
    require(candidate_csv, "candidate_csv");
    require(passed, "passed");
    require(report_json, "report_json");
    wssv::qa::ParityGate gate{max_tolerance, mean_tolerance};
    gate.validate();
    const auto [ref, cand] = wssv::qa::pair_by_id(wssv::qa::read_score_csv(reference_csv),
                                                  wssv::qa::read_score_csv(candidate_csv));
    const auto stats = wssv::qa::compare_outputs(ref, cand);
    const auto verdict = wssv::qa::gate_parity(stats, gate);
    *passed = verdict.passed ? 1 : 0;
    *report_json = dup_string(wssv::qa::parity_report(stats, gate, verdict).dump(2));
  });
}

int wssv_store_open(const char* root, wssv_store** out) {
  return guarded([&] {
    require(root, "root");
    require(out, "out");
    *out = nullptr;
    auto s = std::make_unique<wssv_store>();
    s->store = std::make_unique<wssv::dataset::DatasetStore>(root);
    *out = s.release();
  });
}

int wssv_store_add(wssv_store* store, const uint8_t* data, size_t len, const char* meta_json, char** sample_json) {
  return guarded([&] {
    require(store, "store");
    require(sample_json, "sample_json");
    wssv::dataset::SampleMeta meta;
    std::optional<wssv::Label> label;
    std::string who = "cli";
    if (meta_json) {
      const auto j = parse_json(meta_json, "meta_json");
      if (!j.is_object()) wssv::fail_field(ErrorCode::kValidation, "meta_json", "must be an object");
      for (const auto& [key, v] : j.items()) {
        if (key == "source") meta.source = wssv::parse_source(v.get<std::string>());
        else if (key == "captured_at") meta.captured_at = wssv::parse_rfc3339(v.get<std::string>());
        else if (key == "device_label") meta.device_label = v.get<std::string>();
        else if (key == "label") label = wssv::parse_label(v.get<std::string>());
        else if (key == "who") who = v.get<std::string>();
        else wssv::fail_field(ErrorCode::kValidation, key, "unknown field");
      }
    }
    auto sample = store->store->add_sample(to_bytes(data, len), meta);
    if (label && *label != sample.label) sample = store->store->set_label(sample.id, *label, who);
    *sample_json = dup_string(wssv::dataset::to_json(sample).dump());
  });
}

int wssv_store_get(wssv_store* store, const char* id, char** sample_json) {
  return guarded([&] {
    require(store, "store");
    require(id, "id");
    require(sample_json, "sample_json");
    *sample_json = dup_string(wssv::dataset::to_json(store->store->get(id)).dump());
  });
}

int wssv_store_set_label(wssv_store* store, const char* id, const char* label, const char* who, char** sample_json) {
  return guarded([&] {
    require(store, "store");
    require(id, "id");
    require(label, "label");
    require(sample_json, "sample_json");
    const auto s = store->store->set_label(id, wssv::parse_label(label), who ? who : "cli");
    *sample_json = dup_string(wssv::dataset::to_json(s).dump());
  });
}

int wssv_store_audit(wssv_store* store, const char* id, char** audit_json) {
  return guarded([&] {
    require(store, "store");
    require(id, "id");
    require(audit_json, "audit_json");
    json arr = json::array();
    for (const auto& a : store->store->audit(id)) arr.push_back(wssv::dataset::to_json(a));
    *audit_json = dup_string(arr.dump());
  });
}

int wssv_store_list(wssv_store* store, const char* label, const char* split, char** samples_json) {
  return guarded([&] {
    require(store, "store");
    require(samples_json, "samples_json");
    json arr = json::array();
    for (const auto& s : store->store->list(filter_of(label, split))) arr.push_back(wssv::dataset::to_json(s));
    *samples_json = dup_string(arr.dump());
  });
}

int wssv_store_assign_splits(wssv_store* store, const char* plan_json, int validation_fold, size_t* updated) {
  return guarded([&] {
    require(store, "store");
    require(updated, "updated");
    const auto j = parse_json(plan_json, "plan_json");
    if (j.is_object() && j.contains("assignments")) {
      const auto plan = wssv::eval::fold_plan_from_json(j);
      *updated = store->store->assign_splits(plan, validation_fold >= 0 ? std::optional<int>(validation_fold)
                                                                        : std::nullopt);
    } else {
      *updated = store->store->assign_splits(wssv::eval::split_assignment_from_json(j));
    }
  });
}

int wssv_store_expand(wssv_store* store, const char* specs_json, uint64_t seed, char** created_json) {
  return guarded([&] {
    require(store, "store");
    require(created_json, "created_json");
    const auto j = parse_json(specs_json, "specs_json");
    if (!j.is_array()) wssv::fail_field(ErrorCode::kValidation, "specs_json", "must be an array of specs");
    std::vector<wssv::imaging::AugmentSpec> specs;
    for (const auto& s : j) specs.push_back(wssv::imaging::augment_spec_from_json(s));
    json arr = json::array();
    for (const auto& s : store->store->expand_training(specs, seed)) arr.push_back(wssv::dataset::to_json(s));
    *created_json = dup_string(arr.dump());
  });
}

int wssv_store_export(wssv_store* store, const char* label, const char* split, const char* created_at,
                      char** manifest_json, uint8_t** archive, size_t* archive_len) {
  return guarded([&] {
    require(store, "store");
    require(manifest_json, "manifest_json");
    if (archive) require(archive_len, "archive_len");
    const auto at = created_at ? wssv::parse_rfc3339(created_at) : wssv::now_utc();
    const auto bundle = store->store->export_bundle(filter_of(label, split), at);
    char* text = dup_string(bundle.manifest_json);
    if (archive) {
      try {
        *archive = dup_buffer(bundle.archive);
      } catch (...) {
        std::free(text);
        throw;
      }
      *archive_len = bundle.archive.size();
    }
    *manifest_json = text;
  });
}

int wssv_store_import(wssv_store* store, const char* manifest_json, const uint8_t* archive, size_t archive_len,
                      size_t* created) {
  return guarded([&] {
    require(store, "store");
    require(manifest_json, "manifest_json");
    require(created, "created");
    *created = store->store->import_bundle(manifest_json, to_bytes(archive, archive_len));
  });
}

void wssv_store_close(wssv_store* store) { delete store; }

int wssv_server_create(const char* config_path, const char* overrides_json, wssv_server** out) {
  return guarded([&] {
    require(out, "out");
    *out = nullptr;
    auto cfg = wssv::service::load_config(config_path ? std::optional<std::filesystem::path>(config_path)
                                                      : std::nullopt);
    if (overrides_json) {
      wssv::service::apply_config_json(cfg, parse_json(overrides_json, "overrides_json"));
      cfg.validate();
    }
    auto s = std::make_unique<wssv_server>();
    s->service = std::make_unique<wssv::service::SurveillanceService>(cfg);
    s->http = std::make_unique<wssv::service::HttpServer>(*s->service);
    *out = s.release();
  });
}

int wssv_server_bind(wssv_server* server, int* port) {
  return guarded([&] {
    require(server, "server");
    const auto& cfg = server->service->config();
    const int bound = server->http->bind(cfg.host, cfg.port);
    if (port) *port = bound;
  });
}

int wssv_server_run(wssv_server* server) {
  return guarded([&] {
    require(server, "server");
    server->http->listen();
  });
}

int wssv_server_stop(wssv_server* server) {
  return guarded([&] {
    require(server, "server");
    server->http->stop();
  });
}

void wssv_server_free(wssv_server* server) { delete server; }

}  // extern "C"
