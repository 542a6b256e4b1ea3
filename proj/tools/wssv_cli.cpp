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

// wssv: operator command line over the C API.
//
// Exit codes: 0 success, 1 domain error (one "error: <code>: <message>" line
// on stderr), 2 usage error.

#include <atomic>
#include <chrono>
#include <csignal>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "wssv/wssv.h"

using nlohmann::json;

namespace {

// A failed library call or a domain-level failure detected by the CLI.
struct DomainError {
  std::string code;
  std::string message;
};

void check(int status) {
  if (status != WSSV_OK) {
    std::string msg = wssv_last_error();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    throw DomainError{wssv_status_name(status), msg};
  }
}

// Owns a string returned by the library.
struct Text {
  char* p = nullptr;
  ~Text() { wssv_free_string(p); }
  std::string str() const { return p ? p : ""; }
};

struct Buffer {
  uint8_t* p = nullptr;
  size_t n = 0;
  ~Buffer() { wssv_free_buffer(p); }
};

struct Image {
  wssv_image* p = nullptr;
  ~Image() { wssv_image_free(p); }
};

struct Model {
  wssv_model* p = nullptr;
  ~Model() { wssv_model_free(p); }
};

struct Store {
  wssv_store* p = nullptr;
  ~Store() { wssv_store_close(p); }
};

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw DomainError{"io_error", "cannot read " + path};
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void write_file(const std::string& path, const void* data, size_t n) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DomainError{"io_error", "cannot write " + path};
  out.write(static_cast<const char*>(data), static_cast<std::streamsize>(n));
  if (!out) throw DomainError{"io_error", "short write to " + path};
}

void write_text(const std::string& path, const std::string& text) { write_file(path, text.data(), text.size()); }

// "@file" reads JSON from a file, anything else is inline JSON.
std::string json_arg(const std::string& arg) { return !arg.empty() && arg[0] == '@' ? read_file(arg.substr(1)) : arg; }

json parse(const std::string& text) { return json::parse(text); }

void load_model(Model& m, const std::string& dir, double threshold) { check(wssv_model_load_dir(dir.c_str(), threshold, &m.p)); }

void load_image(Image& img, const std::string& path) { check(wssv_image_read_file(path.c_str(), &img.p)); }

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", prec, v);
  return buf;
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", v);
  return buf;
}

const char* opt_c(const std::string& s) { return s.empty() ? nullptr : s.c_str(); }

std::atomic<bool> g_stop{false};
extern "C" void on_signal(int) { g_stop = true; }

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"WSSV shrimp-disease surveillance toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(wssv_version()));

  // predict
  std::string model_dir;
  std::vector<std::string> images;
  bool as_json = false, as_csv = false;
  double default_threshold = 0.5;
  auto* predict = app.add_subcommand("predict", "Classify images with a model bundle");
  predict->add_option("--model", model_dir, "Model bundle directory")->required()->check(CLI::ExistingDirectory);
  predict->add_option("--image", images, "Image file (repeatable)")->required();
  predict->add_option("--default-threshold", default_threshold, "Threshold when the metadata has none");
  auto* predict_json = predict->add_flag("--json", as_json, "JSON output");
  predict->add_flag("--csv", as_csv, "CSV output (image,score,decision)")->excludes(predict_json);

  // saliency
  std::string image_path, output_path, map_path, fill;
  int patch = 16, stride = 8;
  auto* saliency = app.add_subcommand("saliency", "Occlusion saliency overlay for one image");
  saliency->add_option("--model", model_dir)->required()->check(CLI::ExistingDirectory);
  saliency->add_option("--image", image_path)->required();
  saliency->add_option("--output", output_path, "Overlay PNG path")->required();
  saliency->add_option("--map", map_path, "Also write the saliency map JSON here");
  saliency->add_option("--patch", patch, "Occluder side in pixels")->check(CLI::PositiveNumber);
  saliency->add_option("--stride", stride, "Occluder stride in pixels")->check(CLI::PositiveNumber);
  saliency->add_option("--fill", fill, "mean_color or gray_128")->check(CLI::IsMember({"mean_color", "gray_128"}));
  saliency->add_option("--default-threshold", default_threshold);
  saliency->add_flag("--json", as_json);

  // evaluate
  std::vector<std::string> score_files;
  std::string plan_path;
  double threshold = 0.5;
  auto* evaluate = app.add_subcommand("evaluate", "Per-fold F1/AUC/FNR with mean and std");
  evaluate->add_option("--scores", score_files, "One (sample_id,truth,score) CSV per fold, in fold order")->required();
  evaluate->add_option("--plan", plan_path, "Fold plan JSON to check fold membership against");
  evaluate->add_option("--threshold", threshold)->check(CLI::Range(0.0, 1.0));
  evaluate->add_flag("--json", as_json);

  // kfold / holdout
  std::string manifest_path, output;
  int k = 5;
  std::int64_t seed = 0;
  double fraction = 0.2;
  auto* kfold = app.add_subcommand("kfold", "Stratified k-fold plan from a manifest");
  kfold->add_option("--manifest", manifest_path, "Dataset manifest or {id: class} JSON")->required();
  kfold->add_option("--k", k)->check(CLI::Range(2, 1000));
  kfold->add_option("--seed", seed);
  kfold->add_option("--output", output, "Write the plan here instead of stdout");
  auto* holdout = app.add_subcommand("holdout", "Stratified train/test split from a manifest");
  holdout->add_option("--manifest", manifest_path)->required();
  holdout->add_option("--fraction", fraction, "Test fraction")->check(CLI::Range(0.0, 1.0));
  holdout->add_option("--seed", seed);
  holdout->add_option("--output", output);

  // augment
  std::string spec, store_dir, specs_path;
  std::uint64_t aug_seed = 0;
  auto* augment = app.add_subcommand("augment", "Augment one image, or expand a store's training split");
  augment->add_option("--image", image_path, "Input image");
  augment->add_option("--output", output_path, "Output PNG");
  augment->add_option("--spec", spec, "Augment spec JSON or @file; drawn from --seed when omitted");
  augment->add_option("--store", store_dir, "Dataset store to expand instead of a single image");
  augment->add_option("--specs", specs_path, "JSON array of specs (with --store), or @file");
  augment->add_option("--seed", aug_seed);
  augment->add_flag("--json", as_json);

  // parity
  std::string reference, candidate;
  double max_tol = 2e-3, mean_tol = 1e-4;
  auto* parity = app.add_subcommand("parity", "Conversion parity gate over (input_id, score) CSVs");
  parity->add_option("--reference", reference)->required();
  parity->add_option("--candidate", candidate)->required();
  parity->add_option("--max-tol", max_tol)->check(CLI::PositiveNumber);
  parity->add_option("--mean-tol", mean_tol)->check(CLI::PositiveNumber);
  parity->add_flag("--json", as_json);

  // bench
  std::size_t runs = 5, warmup = 2;
  std::string device = "cpu";
  auto* bench = app.add_subcommand("bench", "Latency benchmark (warm-up, then timed runs)");
  bench->add_option("--model", model_dir)->required()->check(CLI::ExistingDirectory);
  bench->add_option("--image", image_path)->required();
  bench->add_option("--runs", runs)->check(CLI::PositiveNumber);
  bench->add_option("--warmup", warmup);
  bench->add_option("--device", device, "Device label recorded in the report");
  bench->add_option("--default-threshold", default_threshold);
  bench->add_flag("--json", as_json);

  // dataset
  auto* dataset = app.add_subcommand("dataset", "Dataset store administration");
  dataset->require_subcommand(1);
  std::string label, split, source, device_label, captured_at, id, who = "cli", archive_path, created_at;
  int validation_fold = -1;
  auto* d_add = dataset->add_subcommand("add", "Add images");
  d_add->add_option("--store", store_dir)->required();
  d_add->add_option("--image", images)->required();
  d_add->add_option("--label", label)->check(CLI::IsMember({"healthy", "wssv", "unlabeled"}));
  d_add->add_option("--source", source)->check(CLI::IsMember({"field_report", "web", "import"}));
  d_add->add_option("--device-label", device_label);
  d_add->add_option("--captured-at", captured_at, "RFC 3339");
  d_add->add_flag("--json", as_json);
  auto* d_label = dataset->add_subcommand("label", "Set a sample's label");
  d_label->add_option("--store", store_dir)->required();
  d_label->add_option("--id", id)->required();
  d_label->add_option("--label", label)->required()->check(CLI::IsMember({"healthy", "wssv", "unlabeled"}));
  d_label->add_option("--who", who);
  d_label->add_flag("--json", as_json);
  auto* d_list = dataset->add_subcommand("list", "List samples");
  d_list->add_option("--store", store_dir)->required();
  d_list->add_option("--label", label)->check(CLI::IsMember({"healthy", "wssv", "unlabeled"}));
  d_list->add_option("--split", split)->check(CLI::IsMember({"train", "validation", "test", "unassigned"}));
  d_list->add_flag("--json", as_json);
  auto* d_audit = dataset->add_subcommand("audit", "Relabeling history of a sample");
  d_audit->add_option("--store", store_dir)->required();
  d_audit->add_option("--id", id)->required();
  auto* d_assign = dataset->add_subcommand("assign", "Apply a holdout split or fold plan");
  d_assign->add_option("--store", store_dir)->required();
  d_assign->add_option("--plan", plan_path)->required();
  d_assign->add_option("--validation-fold", validation_fold, "Fold to mark as validation");
  auto* d_export = dataset->add_subcommand("export", "Write manifest JSON and blob tar");
  d_export->add_option("--store", store_dir)->required();
  d_export->add_option("--manifest", manifest_path)->required();
  d_export->add_option("--archive", archive_path)->required();
  d_export->add_option("--label", label)->check(CLI::IsMember({"healthy", "wssv", "unlabeled"}));
  d_export->add_option("--split", split)->check(CLI::IsMember({"train", "validation", "test", "unassigned"}));
  d_export->add_option("--created-at", created_at, "RFC 3339; defaults to now");
  auto* d_import = dataset->add_subcommand("import", "Import a manifest and blob tar");
  d_import->add_option("--store", store_dir)->required();
  d_import->add_option("--manifest", manifest_path)->required();
  d_import->add_option("--archive", archive_path)->required();

  // serve
  std::string config_path, listen, data_dir;
  std::optional<double> serve_threshold;
  auto* serve = app.add_subcommand("serve", "Run the HTTP API");
  serve->add_option("--config", config_path, "JSON config file");
  serve->add_option("--listen", listen, "host:port");
  serve->add_option("--data-dir", data_dir);
  serve->add_option("--threshold", serve_threshold, "Default decision threshold")->check(CLI::Range(0.0, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (*predict) {
      Model m;
      load_model(m, model_dir, default_threshold);
      std::vector<Image> imgs(images.size());
      std::vector<const wssv_image*> ptrs;
      for (size_t i = 0; i < images.size(); ++i) {
        load_image(imgs[i], images[i]);
        ptrs.push_back(imgs[i].p);
      }
      Text out;
      check(wssv_model_predict_batch(m.p, ptrs.data(), ptrs.size(), &out.p));
      const auto preds = parse(out.str());
      if (as_json) {
        json arr = json::array();
        for (size_t i = 0; i < images.size(); ++i) arr.push_back({{"image", images[i]}, {"prediction", preds[i]}});
        std::cout << arr.dump(2) << "\n";
      } else if (as_csv) {
        std::cout << "image,score,decision\n";
        for (size_t i = 0; i < images.size(); ++i) {
          std::cout << images[i] << "," << sci(preds[i]["score"].get<double>()) << ","
                    << preds[i]["decision"].get<std::string>() << "\n";
        }
      } else {
        for (size_t i = 0; i < images.size(); ++i) {
          std::cout << images[i] << "  score " << fmt(preds[i]["score"].get<double>()) << "  "
                    << preds[i]["decision"].get<std::string>() << "  (" << preds[i]["model_id"].get<std::string>()
                    << ", " << fmt(preds[i]["latency_ms"].get<double>(), 2) << " ms)\n";
        }
      }
    } else if (*saliency) {
      Model m;
      load_model(m, model_dir, default_threshold);
      Image img;
      load_image(img, image_path);
      json occ = {{"patch_side", patch}, {"stride", stride}};
      if (!fill.empty()) occ["fill"] = fill;
      Text map;
      Buffer png;
      check(wssv_model_saliency(m.p, img.p, occ.dump().c_str(), &map.p, &png.p, &png.n));
      write_file(output_path, png.p, png.n);
      if (!map_path.empty()) write_text(map_path, map.str());
      const auto j = parse(map.str());
      if (as_json) {
        std::cout << json{{"overlay", output_path}, {"side", j["side"]}, {"baseline_score", j["baseline_score"]}}.dump(2)
                  << "\n";
      } else {
        std::cout << "overlay written to " << output_path << " (baseline score "
                  << fmt(j["baseline_score"].get<double>()) << ")\n";
      }
    } else if (*evaluate) {
      std::vector<std::string> texts;
      for (const auto& f : score_files) texts.push_back(read_file(f));
      std::vector<const char*> ptrs;
      for (const auto& t : texts) ptrs.push_back(t.c_str());
      const std::string plan = plan_path.empty() ? "" : read_file(plan_path);
      Text summary;
      check(wssv_eval_run_csv(ptrs.data(), ptrs.size(), opt_c(plan), threshold, &summary.p));
      if (as_json) {
        std::cout << summary.str() << "\n";
      } else {
        Text table;
        check(wssv_eval_format_table(summary.p, &table.p));
        std::cout << table.str();
      }
    } else if (*kfold || *holdout) {
      const auto labels = read_file(manifest_path);
      Text out;
      if (*kfold) check(wssv_eval_kfold(labels.c_str(), k, seed, &out.p));
      else check(wssv_eval_holdout(labels.c_str(), fraction, seed, &out.p));
      if (output.empty()) std::cout << out.str() << "\n";
      else write_text(output, out.str() + "\n");
    } else if (*augment) {
      if (!store_dir.empty()) {
        if (specs_path.empty()) throw CLI::RequiredError("--specs");
        Store s;
        check(wssv_store_open(store_dir.c_str(), &s.p));
        Text created;
        check(wssv_store_expand(s.p, json_arg(specs_path).c_str(), aug_seed, &created.p));
        const auto arr = parse(created.str());
        if (as_json) std::cout << arr.dump(2) << "\n";
        else std::cout << "created " << arr.size() << " augmented samples\n";
      } else {
        if (image_path.empty()) throw CLI::RequiredError("--image");
        if (output_path.empty()) throw CLI::RequiredError("--output");
        std::string spec_text;
        if (spec.empty()) {
          Text drawn;
          check(wssv_augment_sample_spec(nullptr, aug_seed, &drawn.p));
          spec_text = drawn.str();
        } else {
          spec_text = json_arg(spec);
        }
        Image in, out;
        load_image(in, image_path);
        check(wssv_image_augment(in.p, spec_text.c_str(), aug_seed, &out.p));
        Buffer png;
        check(wssv_image_encode_png(out.p, &png.p, &png.n));
        write_file(output_path, png.p, png.n);
        if (as_json) std::cout << json{{"output", output_path}, {"spec", parse(spec_text)}, {"seed", aug_seed}}.dump(2) << "\n";
        else std::cout << "wrote " << output_path << " with spec " << parse(spec_text).dump() << "\n";
      }
    } else if (*parity) {
      const auto ref = read_file(reference);
      const auto cand = read_file(candidate);
      int passed = 0;
      Text report;
      check(wssv_parity_csv(ref.c_str(), cand.c_str(), max_tol, mean_tol, &passed, &report.p));
      const auto r = parse(report.str());
      if (as_json) {
        std::cout << r.dump(2) << "\n";
      } else {
        const auto& st = r["stats"];
        std::cout << "n " << st["count"] << "  mean " << sci(st["mean"]) << "  std " << sci(st["stddev"]) << "  min "
                  << sci(st["min"]) << "  max " << sci(st["max"]) << "\n"
                  << (passed ? "PASS" : "FAIL") << " (max_tolerance " << sci(max_tol) << ", mean_tolerance "
                  << sci(mean_tol) << ")\n";
      }
      if (!passed) {
        std::string why;
        for (const auto& v : r["violations"]) why += (why.empty() ? "" : "; ") + v.get<std::string>();
        throw DomainError{"parity_gate_failed", why};
      }
    } else if (*bench) {
      Model m;
      load_model(m, model_dir, default_threshold);
      Image img;
      load_image(img, image_path);
      Text stats;
      check(wssv_model_benchmark(m.p, img.p, runs, warmup, device.c_str(), &stats.p));
      const auto s = parse(stats.str());
      if (as_json) {
        std::cout << s.dump(2) << "\n";
      } else {
        std::cout << "device " << s["device_label"].get<std::string>() << "  warm-up " << s["warmup_runs"] << "  runs "
                  << s["runs"] << "\n";
        std::size_t i = 0;
        for (const auto& v : s["per_run_ms"]) std::cout << "  run " << i++ << ": " << fmt(v.get<double>(), 3) << " ms\n";
        std::cout << "mean " << fmt(s["mean_ms"].get<double>(), 3) << " ms\n";
      }
    } else if (*dataset) {
      Store s;
      check(wssv_store_open(store_dir.c_str(), &s.p));
      if (*d_add) {
        json meta = json::object();
        if (!label.empty()) meta["label"] = label;
        if (!source.empty()) meta["source"] = source;
        if (!device_label.empty()) meta["device_label"] = device_label;
        if (!captured_at.empty()) meta["captured_at"] = captured_at;
        json added = json::array();
        for (const auto& path : images) {
          const auto bytes = read_file(path);
          Text sample;
          check(wssv_store_add(s.p, reinterpret_cast<const uint8_t*>(bytes.data()), bytes.size(), meta.dump().c_str(),
                               &sample.p));
          added.push_back(parse(sample.str()));
          if (!as_json) std::cout << added.back()["id"].get<std::string>() << "  " << path << "\n";
        }
        if (as_json) std::cout << added.dump(2) << "\n";
      } else if (*d_label) {
        Text sample;
        check(wssv_store_set_label(s.p, id.c_str(), label.c_str(), who.c_str(), &sample.p));
        if (as_json) std::cout << parse(sample.str()).dump(2) << "\n";
        else std::cout << id << " -> " << label << "\n";
      } else if (*d_list) {
        Text list;
        check(wssv_store_list(s.p, opt_c(label), opt_c(split), &list.p));
        const auto arr = parse(list.str());
        if (as_json) {
          std::cout << arr.dump(2) << "\n";
        } else {
          for (const auto& x : arr) {
            std::cout << x["id"].get<std::string>() << "  " << x["label"].get<std::string>() << "  "
                      << x["split"].get<std::string>() << "  " << x["source"].get<std::string>()
                      << (x["augmentation_of"].is_null() ? "" : "  (augmented)") << "\n";
          }
          std::cout << arr.size() << " samples\n";
        }
      } else if (*d_audit) {
        Text audit;
        check(wssv_store_audit(s.p, id.c_str(), &audit.p));
        std::cout << parse(audit.str()).dump(2) << "\n";
      } else if (*d_assign) {
        size_t updated = 0;
        check(wssv_store_assign_splits(s.p, read_file(plan_path).c_str(), validation_fold, &updated));
        std::cout << "updated " << updated << " samples\n";
      } else if (*d_export) {
        Text manifest;
        Buffer archive;
        check(wssv_store_export(s.p, opt_c(label), opt_c(split), opt_c(created_at), &manifest.p, &archive.p, &archive.n));
        write_text(manifest_path, manifest.str());
        write_file(archive_path, archive.p, archive.n);
        std::cout << "exported " << parse(manifest.str())["samples"].size() << " samples\n";
      } else if (*d_import) {
        const auto manifest = read_file(manifest_path);
        const auto archive = read_file(archive_path);
        size_t created = 0;
        check(wssv_store_import(s.p, manifest.c_str(), reinterpret_cast<const uint8_t*>(archive.data()), archive.size(),
                                &created));
        std::cout << "imported " << created << " new samples\n";
      }
    } else if (*serve) {
      json overrides = json::object();
      if (!listen.empty()) overrides["listen"] = listen;
      if (!data_dir.empty()) overrides["data_dir"] = data_dir;
      if (serve_threshold) overrides["default_threshold"] = *serve_threshold;
      wssv_server* server = nullptr;
      check(wssv_server_create(opt_c(config_path), overrides.dump().c_str(), &server));
      int port = 0;
      const int bind_status = wssv_server_bind(server, &port);
      if (bind_status != WSSV_OK) {
        const std::string msg = wssv_last_error();
        wssv_server_free(server);
        throw DomainError{wssv_status_name(bind_status), msg};
      }
      std::cerr << "listening on port " << port << std::endl;
      std::signal(SIGINT, on_signal);
      std::signal(SIGTERM, on_signal);
      std::thread watcher([server] {
        while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
        wssv_server_stop(server);
      });
      const int status = wssv_server_run(server);
      g_stop = true;
      watcher.join();
      wssv_server_free(server);
      check(status);
    }
  } catch (const DomainError& e) {
    std::cerr << "error: " << e.code << ": " << e.message << "\n";
    return 1;
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  } catch (const json::exception& e) {
    std::cerr << "error: internal_error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
