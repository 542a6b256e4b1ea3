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

// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit on any failure.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "support.hpp"

#include "common/hash.hpp"
#include "common/io.hpp"
#include "dataset/sqlite.hpp"
#include "dataset/store.hpp"
#include "eval/metrics.hpp"
#include "eval/splits.hpp"
#include "explain/saliency.hpp"
#include "imaging/augment.hpp"
#include "imaging/image.hpp"
#include "imaging/preprocess.hpp"
#include "inference/engine.hpp"
#include "qa/latency.hpp"
#include "qa/parity.hpp"
#include "service/service.hpp"

using namespace wssv;
using nlohmann::json;

namespace {

// Collects the first few failed expectations of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok) failures_.push_back(what);
  }
  bool passed() const { return failures_.empty(); }
  std::string summary() const {
    std::string out;
    for (std::size_t i = 0; i < failures_.size() && i < 3; ++i) out += (i ? "; " : "") + failures_[i];
    if (failures_.size() > 3) out += "; +" + std::to_string(failures_.size() - 3) + " more";
    return out;
  }

 private:
  std::vector<std::string> failures_;
};

int g_failed = 0;

void criterion(const std::string& name, const std::function<void(Check&)>& body) {
  Check c;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    body(c);
  } catch (const std::exception& e) {
    c.expect(false, std::string("threw: ") + e.what());
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  if (c.passed()) {
    std::printf("PASS %s (%.2fs)\n", name.c_str(), secs);
  } else {
    ++g_failed;
    std::printf("FAIL %s: %s\n", name.c_str(), c.summary().c_str());
  }
  std::fflush(stdout);
}

template <typename F>
ErrorCode code_of(F&& f) {
  return test::capture_error(std::forward<F>(f)).code();
}

std::string num(double v) {
  std::ostringstream s;
  s.precision(17);
  s << v;
  return s.str();
}

// Random scored instance with at least one item of each class. Ties come
// from drawing scores on a coarse grid.
std::vector<eval::LabeledScore> random_instance(std::mt19937_64& gen, bool ties) {
  const std::size_t n = 2 + gen() % 49;
  std::vector<eval::LabeledScore> items(n);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t i = 0; i < n; ++i) {
    items[i].sample_id = "s" + std::to_string(i);
    items[i].positive = gen() % 2 == 0;
    items[i].score = ties ? static_cast<double>(gen() % 6) / 5.0 : u(gen);
  }
  items[0].positive = true;
  items[1].positive = false;
  return items;
}

double brute_auc(const std::vector<eval::LabeledScore>& items) {
  double wins = 0.0;
  std::size_t pairs = 0;
  for (const auto& p : items) {
    if (!p.positive) continue;
    for (const auto& q : items) {
      if (q.positive) continue;
      ++pairs;
      if (p.score > q.score) wins += 1.0;
      else if (p.score == q.score) wins += 0.5;
    }
  }
  return wins / static_cast<double>(pairs);
}

void auc_oracle(Check& c) {
  std::mt19937_64 gen(20240601);
  const auto t0 = std::chrono::steady_clock::now();
  int instances = 0;
  for (int i = 0; i < 1000; ++i) {
    const auto items = random_instance(gen, i % 2 == 0);
    const double fast = eval::auc_roc(items), slow = brute_auc(items);
    c.expect(std::abs(fast - slow) <= 1e-9, "instance " + std::to_string(i) + ": " + num(fast) + " vs " + num(slow));
    ++instances;
  }
  const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  c.expect(instances >= 500, "too few instances");
  c.expect(secs < 10.0, "took " + num(secs) + " s");
}

void f1_fnr_oracle(Check& c) {
  std::mt19937_64 gen(99);
  for (int i = 0; i < 1000; ++i) {
    const auto items = random_instance(gen, i % 3 == 0);
    const double threshold = static_cast<double>(gen() % 11) / 10.0;
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    for (const auto& it : items) {
      const bool predicted = it.score >= threshold;
      if (it.positive && predicted) ++tp;
      else if (it.positive) ++fn;
      else if (predicted) ++fp;
      else ++tn;
    }
    const auto cm = eval::confusion(items, threshold);
    const std::string tag = "instance " + std::to_string(i);
    c.expect(cm.tp == tp && cm.fp == fp && cm.tn == tn && cm.fn == fn, tag + ": confusion tallies differ");
    const double f1 = 2.0 * tp / static_cast<double>(2 * tp + fp + fn);
    const double miss = static_cast<double>(fn) / static_cast<double>(fn + tp);
    const auto got = eval::f1_score(cm);
    if (2 * tp + fp + fn == 0) c.expect(got.degenerate, tag + ": degenerate F1 not flagged");
    else c.expect(got.value == f1, tag + ": F1 " + num(got.value) + " vs " + num(f1));
    c.expect(eval::fnr(cm) == miss, tag + ": FNR " + num(eval::fnr(cm)) + " vs " + num(miss));
  }
}

void stratification(Check& c) {
  const auto labels = test::class_labels(411, 38);
  for (std::int64_t seed : {0, 1, 2, 17, 2024, -5, 987654321}) {
    const auto plan = eval::stratified_kfold(labels, 5, seed);
    const std::string tag = "seed " + std::to_string(seed);
    c.expect(plan == eval::stratified_kfold(labels, 5, seed), tag + ": not deterministic");
    c.expect(plan.assignments.size() == labels.size(), tag + ": not a partition");
    std::set<std::string> seen;
    for (int f = 0; f < 5; ++f) {
      int pos = 0, neg = 0;
      for (const auto& id : plan.fold_ids(f)) {
        c.expect(seen.insert(id).second, tag + ": id in two folds");
        (labels.at(id) == "wssv" ? pos : neg) += 1;
      }
      c.expect(pos == 7 || pos == 8, tag + ": fold " + std::to_string(f) + " has " + std::to_string(pos) + " positives");
      c.expect(neg == 82 || neg == 83,
               tag + ": fold " + std::to_string(f) + " has " + std::to_string(neg) + " negatives");
    }
    c.expect(seen.size() == labels.size(), tag + ": folds do not cover every id");

    const auto split = eval::stratified_holdout(labels, 0.2, seed);
    c.expect(split == eval::stratified_holdout(labels, 0.2, seed), tag + ": holdout not deterministic");
    int pos = 0, neg = 0;
    for (const auto& id : split.test_ids) (labels.at(id) == "wssv" ? pos : neg) += 1;
    c.expect(split.test_ids.size() == 90, tag + ": test size " + std::to_string(split.test_ids.size()));
    c.expect(pos == 8 && neg == 82, tag + ": test composition " + std::to_string(neg) + "/" + std::to_string(pos));
    c.expect(split.train_ids.size() + split.test_ids.size() == labels.size(), tag + ": holdout not a partition");
  }
}

void parity(Check& c) {
  const std::vector<double> ref{0.5, 0.7, 0.9}, cand{0.5, 0.72, 0.89};
  const auto s = qa::compare_outputs(ref, cand);
  c.expect(std::abs(s.mean - 0.01) <= 1e-12, "mean " + num(s.mean));
  c.expect(s.min == 0.0, "min " + num(s.min));
  c.expect(std::abs(s.max - 0.02) <= 1e-12, "max " + num(s.max));
  c.expect(std::abs(s.stddev - 0.0081649658092772603) <= 1e-12, "stddev " + num(s.stddev));

  const qa::ParityGate gate{2e-3, 1e-4};
  qa::ParityStats reference;
  reference.count = 1;
  reference.mean = 3.63e-05;
  reference.max = 1.65e-03;
  c.expect(qa::gate_parity(reference, gate).passed, "reference envelope rejected");
  qa::ParityStats over = reference;
  over.max = 2.5e-03;
  const auto v = qa::gate_parity(over, gate);
  c.expect(!v.passed && v.violations.size() == 1, "max 2.5e-03 not rejected on max alone");
}

void toy_end_to_end(Check& c) {
  const auto h = test::load_fixture_model("toy_conv");
  c.expect(h->model_id() == "toy_conv@1.0.0", "model id " + h->model_id());
  const auto in = test::pattern_input(0);
  const auto first = h->predict(in);
  for (int i = 0; i < 100; ++i) {
    const auto again = h->predict(in);
    if (again.score != first.score || again.decision != first.decision) {
      c.expect(false, "repeat " + std::to_string(i) + " differs");
      break;
    }
  }
  const double want = inference::sigmoid(test::expected_output("toy_conv", "pattern_0"));
  c.expect(std::abs(first.score - want) <= 1e-5, "score " + num(first.score) + " vs reference " + num(want));
  c.expect(inference::sigmoid(0.0) == 0.5, "sigmoid(0) != 0.5");

  std::vector<imaging::ModelInput> batch;
  for (int v = 0; v < 4; ++v) batch.push_back(test::pattern_input(v));
  const auto preds = h->predict_batch(batch);
  c.expect(preds.size() == batch.size(), "batch size");
  for (std::size_t i = 0; i < batch.size() && i < preds.size(); ++i) {
    c.expect(preds[i].score == h->predict(batch[i]).score, "batch item " + std::to_string(i) + " differs");
  }

  c.expect(inference::decide(0.5, 0.5) == inference::Decision::kWssv, "tie at threshold not positive");
  const auto flat = test::load_fixture_model("constant_zero");
  const auto tie = flat->predict(in);
  c.expect(tie.score == 0.5 && tie.decision == inference::Decision::kWssv, "constant 0.5 model not positive");
}

void saliency(Check& c) {
  const auto flat = test::load_fixture_model("constant_zero");
  explain::OcclusionConfig cfg;
  cfg.patch_side = 32;
  cfg.stride = 32;
  const auto zero = explain::occlusion_saliency(*flat, test::pattern_input(1), cfg);
  c.expect(std::all_of(zero.values.begin(), zero.values.end(), [](double v) { return v == 0.0; }),
           "constant model map not all zero");

  // Patch-sensitive model: logit depends on the top-left 32x32 block only.
  const auto h = test::load_fixture_model("patch_sensitive");
  auto input = test::constant_input(0.0f);
  for (int ch = 0; ch < 3; ++ch)
    for (int y = 0; y < 32; ++y)
      for (int x = 0; x < 32; ++x) input.at(x, y, ch) = 1.0f;
  cfg.patch_side = 16;
  cfg.stride = 16;
  const auto map = explain::occlusion_saliency(*h, input, cfg);
  const auto arg = static_cast<int>(std::max_element(map.values.begin(), map.values.end()) - map.values.begin());
  c.expect(arg % 224 < 32 && arg / 224 < 32, "argmax outside the sensitive region");

  // Brute-force enumeration: every patch on its own copy, mean-colour fill.
  double mean[3] = {0, 0, 0};
  for (int ch = 0; ch < 3; ++ch) {
    for (int y = 0; y < 224; ++y)
      for (int x = 0; x < 224; ++x) mean[ch] += input.at(x, y, ch);
    mean[ch] /= 224.0 * 224.0;
  }
  const double base = h->predict(input).score;
  double best = -1.0;
  int best_x = -1, best_y = -1;
  for (int py = 0; py + 16 <= 224; py += 16)
    for (int px = 0; px + 16 <= 224; px += 16) {
      auto occluded = input;
      for (int ch = 0; ch < 3; ++ch)
        for (int y = py; y < py + 16; ++y)
          for (int x = px; x < px + 16; ++x) occluded.at(x, y, ch) = static_cast<float>(mean[ch]);
      const double drop = base - h->predict(occluded).score;
      if (drop > best) best = drop, best_x = px, best_y = py;
    }
  c.expect(best_x >= 0 && best_x < 32 && best_y < 32, "brute-force best patch outside the sensitive region");
  c.expect(map.at(best_x, best_y) == 1.0, "map does not peak on the brute-force best patch");

  int calls = 0;
  const explain::ScoreFn counting = [&](const imaging::ModelInput&) {
    ++calls;
    return 0.25;
  };
  for (auto [patch, stride] : {std::pair{16, 8}, std::pair{16, 16}, std::pair{32, 24}}) {
    calls = 0;
    explain::OcclusionConfig k;
    k.patch_side = patch;
    k.stride = stride;
    explain::occlusion_saliency(counting, test::pattern_input(0), k, imaging::Normalization{});
    const int per_axis = (224 - patch) / stride + 1;
    c.expect(calls == per_axis * per_axis + 1, "patch " + std::to_string(patch) + "/" + std::to_string(stride) +
                                                   ": " + std::to_string(calls) + " forward passes");
  }
}

void latency(Check& c) {
  const auto h = test::load_fixture_model("constant_zero");
  const auto in = test::pattern_input(0);
  auto times = std::make_shared<std::vector<double>>();
  double t = 100.0;
  for (double d : {10.0, 12.0, 11.0, 9.0, 13.0}) {
    times->push_back(t);
    times->push_back(t + d);
    t += d + 1.0;
  }
  std::size_t next = 0;
  const qa::ClockFn fake = [&]() { return times->at(next++); };
  const auto s = qa::benchmark_latency(*h, in, qa::kDefaultRuns, qa::kDefaultWarmup, fake);
  c.expect(s.mean == 11.0, "mean " + num(s.mean));
  c.expect(s.per_run == std::vector<double>{10, 12, 11, 9, 13}, "per-run durations");
  c.expect(qa::kDefaultRuns == 5 && qa::kDefaultWarmup == 2, "defaults are not 5 runs / 2 warm-ups");
  c.expect(s.runs == 5 && s.warmup_runs == 2, "defaults not honored");
  c.expect(next == 10, "timed clock reads " + std::to_string(next));

  const auto real = qa::benchmark_latency(*h, in);
  c.expect(real.per_run.size() == 5 && real.warmup_runs == 2, "default wall-clock run count");
}

void augmentation(Check& c) {
  const auto img = test::noise_image(33, 33, 4);
  const auto wide = test::noise_image(40, 23, 5);
  for (const auto* m : {&img, &wide}) {
    c.expect(imaging::flip_horizontal(imaging::flip_horizontal(*m)) == *m, "double horizontal flip");
    c.expect(imaging::flip_vertical(imaging::flip_vertical(*m)) == *m, "double vertical flip");
    c.expect(imaging::augment(*m, imaging::AugmentSpec{}, 9) == *m, "identity spec");
  }
  auto r = img;
  for (int i = 0; i < 4; ++i) r = imaging::rotate(r, 90.0);
  c.expect(r == img, "four quarter turns");
  imaging::AugmentSpec quarter;
  quarter.rotation_degrees = 90.0;
  auto q = img;
  for (int i = 0; i < 4; ++i) q = imaging::augment(q, quarter, 1);
  c.expect(q == img, "four quarter-turn specs");

  test::TempDir tmp;
  dataset::DatasetStore store(tmp.path());
  std::vector<std::string> ids;
  for (int i = 0; i < 6; ++i) {
    dataset::SampleMeta meta;
    const auto s = store.add_sample(test::noise_png(8, 8, 100 + i), meta);
    store.set_label(s.id, i < 4 ? Label::kHealthy : Label::kWssv);
    ids.push_back(s.id);
  }
  store.assign_splits(eval::SplitAssignment{{ids[0], ids[1], ids[4]}, {ids[2], ids[3], ids[5]}, 0.5, 0});
  std::vector<imaging::AugmentSpec> specs(1);
  specs[0].flip_horizontal = true;
  const auto copies = store.expand_training(specs, 3);
  c.expect(copies.size() == 3, "expected 3 augmented copies, got " + std::to_string(copies.size()));
  for (const auto& s : store.list()) {
    if (s.augmentation_of) c.expect(s.split == Split::kTrain, "augmented copy outside train");
  }
  if (copies.empty()) return;

  c.expect(code_of([&] { store.assign_splits(eval::SplitAssignment{{}, {copies[0].id}, 0.2, 0}); }) ==
               ErrorCode::kLeakage,
           "plan moving a copy to test accepted");
  c.expect(code_of([&] { store.assign_splits(eval::SplitAssignment{{}, {ids[0]}, 0.2, 0}); }) == ErrorCode::kLeakage,
           "plan moving an augmented origin to test accepted");

  imaging::LabeledImage copy;
  copy.image = test::noise_image(8, 8, 555);
  copy.encoded = imaging::encode_png(copy.image);
  copy.record.id = sha256_hex(copy.encoded);
  copy.record.label = Label::kHealthy;
  copy.record.split = Split::kTest;
  copy.record.augmentation_of = ids[0];
  c.expect(code_of([&] { store.add_augmented(copy); }) == ErrorCode::kLeakage, "augmented write into test accepted");
  copy.record.split = Split::kTrain;
  copy.record.augmentation_of = ids[2];  // origin in test
  c.expect(code_of([&] { store.add_augmented(copy); }) == ErrorCode::kLeakage, "copy of a test sample accepted");

  imaging::LabeledImage held;
  held.record = store.get(ids[2]);
  held.image = imaging::decode_image(store.read_blob(ids[2]));
  c.expect(code_of([&] { imaging::expand_training_set({held}, specs, 1); }) == ErrorCode::kLeakage,
           "expanding a test sample accepted");

  db::Database raw(tmp / "dataset.db");
  c.expect(code_of([&] { raw.exec("UPDATE samples SET split = 'validation' WHERE augmentation_of IS NOT NULL"); }) !=
               ErrorCode::kOk,
           "schema accepted an augmented row in validation");
  for (const auto& s : store.list()) {
    if (s.augmentation_of) c.expect(s.split == Split::kTrain, "augmented copy moved after rejected writes");
  }
}

std::size_t active_models(const json& listing) {
  std::size_t n = 0;
  for (const auto& m : listing.at("models")) n += m.at("active").get<bool>();
  return n;
}

void service_round_trips(Check& c) {
  test::TempDir tmp;
  service::ServiceConfig cfg;
  cfg.data_dir = tmp / "data";
  cfg.occlusion.patch_side = 56;
  cfg.occlusion.stride = 56;
  service::SurveillanceService svc(cfg);

  auto upload = [&](const std::string& name) {
    const auto dir = test::model_dir(name);
    return svc.upload_model(read_file(dir / "model.onnx"), read_text_file(dir / "metadata.json"), std::nullopt)
        .at("id")
        .get<std::string>();
  };
  const auto toy = upload("toy_conv");
  svc.activate_model(toy);

  const auto png = test::noise_png(320, 240, 8);
  const auto pred = svc.predict(png, true);
  const std::string sid = pred.at("sample_id");
  c.expect(svc.dataset().read_blob(sid) == png, "uploaded image not stored byte-exactly");
  c.expect(pred.at("overlay").is_object(), "no saliency overlay");

  const json draft = {{"location", {{"latitude", 10.5}, {"longitude", 122.25}, {"source", "device"}, {"accuracy", 8}}},
                      {"images", {sid}},
                      {"water", {{"temperature", 28.0}, {"ph", 8.1}, {"salinity", 18.0}, {"dissolved_oxygen", 5.2},
                                 {"ammonia", 0.05}}},
                      {"environment", {{"air_temperature", 31.0}, {"weather_note", "rain"}}},
                      {"notes", "lethargy"},
                      {"submitter", "pond 7"}};
  const auto stored = svc.submit_report(draft);
  const auto fetched = svc.get_report(json::parse(stored).at("id"));
  c.expect(fetched == stored, "fetched report differs from the submitted one");
  const auto f = json::parse(fetched);
  c.expect(f.at("location") == json({{"latitude", 10.5}, {"longitude", 122.25}, {"source", "device"}, {"accuracy", 8.0}}),
           "location fields");
  c.expect(f.at("water") == draft.at("water"), "water fields");
  c.expect(f.at("environment") == draft.at("environment"), "environment fields");
  c.expect(f.at("notes") == "lethargy" && f.at("submitter") == "pond 7", "notes/submitter");
  c.expect(f.at("images").size() == 1 && f.at("images")[0].at("prediction") == pred.at("prediction"),
           "image prediction");

  for (int i = 0; i < 5; ++i) {
    svc.add_sample(test::noise_png(12, 10, 300 + i), {}, i % 2 ? Label::kWssv : Label::kHealthy, "acceptance");
  }
  const auto first = svc.export_dataset({});
  service::ServiceConfig other_cfg = cfg;
  other_cfg.data_dir = tmp / "other";
  service::SurveillanceService other(other_cfg);
  other.import_dataset(first.manifest_json, first.archive);
  const auto second = other.export_dataset({});
  c.expect(second.archive == first.archive, "archive differs after export/import/export");
  // Manifests carry their creation time, so compare the sample records.
  c.expect(json::parse(second.manifest_json).at("samples") == json::parse(first.manifest_json).at("samples"),
           "manifest samples differ after export/import/export");

  std::vector<std::string> ids{toy, upload("constant_zero"), upload("patch_sensitive"), upload("toy_conv_prob")};
  const std::vector<std::string> names{"toy_conv", "constant_zero", "patch_sensitive", "toy_conv_prob"};
  std::atomic<bool> done{false}, violated{false};
  std::thread observer([&] {
    while (!done) {
      if (active_models(svc.list_models()) != 1) violated = true;
    }
  });
  std::vector<std::thread> workers;
  for (int t = 0; t < 4; ++t) {
    workers.emplace_back([&, t] {
      for (int i = 0; i < 20; ++i) {
        svc.activate_model(ids[(t * 3 + i) % ids.size()]);
        if (i % 4 == 0) upload(names[(t + i) % names.size()]);
      }
    });
  }
  for (auto& w : workers) w.join();
  done = true;
  observer.join();
  c.expect(!violated, "observed a state with other than one active model");
  c.expect(active_models(svc.list_models()) == 1, "final active count");
}

}  // namespace

int main() {
  criterion("AUC oracle equivalence", auc_oracle);
  criterion("F1/FNR oracle equivalence", f1_fnr_oracle);
  criterion("Stratification at 411/38", stratification);
  criterion("Parity worked example and gate", parity);
  criterion("Toy end-to-end inference", toy_end_to_end);
  criterion("Saliency properties", saliency);
  criterion("Latency harness", latency);
  criterion("Augmentation identities and leakage guard", augmentation);
  criterion("Service round-trips", service_round_trips);
  std::printf("%d criteria failed\n", g_failed);
  return g_failed == 0 ? 0 : 1;
}
