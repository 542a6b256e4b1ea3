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

#include "doctest.h"

#include <set>
#include <thread>

#include "support.hpp"

#include "common/hash.hpp"
#include "common/io.hpp"
#include "dataset/sqlite.hpp"
#include "dataset/store.hpp"
#include "dataset/tar.hpp"
#include "imaging/augment.hpp"

using namespace wssv;
using namespace wssv::dataset;
using wssv::test::capture_error;
namespace fs = std::filesystem;

namespace {

const Timestamp kT0 = parse_rfc3339("2026-03-01T08:00:00Z");

DatasetStore::Clock fixed_clock() {
  return [] { return kT0; };
}

std::set<std::string> blob_files(const fs::path& root) {
  std::set<std::string> out;
  if (!fs::exists(root / "blobs")) return out;
  for (const auto& e : fs::recursive_directory_iterator(root / "blobs"))
    if (e.is_regular_file()) out.insert(fs::relative(e.path(), root).string());
  return out;
}

// Records, audits and blob files: everything a failed mutation must leave alone.
std::string snapshot(const DatasetStore& store) {
  std::string s;
  for (const auto& r : store.list()) {
    s += to_json(r).dump() + "\n";
    for (const auto& a : store.audit(r.id)) s += to_json(a).dump() + "\n";
  }
  for (const auto& f : blob_files(store.root())) s += f + "\n";
  return s;
}

// `n` healthy then `m` wssv samples, all labeled.
std::vector<std::string> populate(DatasetStore& store, std::size_t healthy, std::size_t wssv, std::uint64_t seed0 = 0) {
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < healthy + wssv; ++i) {
    const auto s = store.add_sample(test::noise_png(6, 5, seed0 + i), {SampleSource::kWeb, std::nullopt, std::nullopt});
    store.set_label(s.id, i < healthy ? Label::kHealthy : Label::kWssv, "curator");
    ids.push_back(s.id);
  }
  return ids;
}

eval::ClassLabels store_labels(const DatasetStore& store) {
  eval::ClassLabels labels;
  for (const auto& s : store.list())
    if (s.label != Label::kUnlabeled && !s.augmentation_of) labels[s.id] = std::string(to_string(s.label));
  return labels;
}

}  // namespace

TEST_CASE("store: add, dedup, defaults") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto bytes = test::noise_png(9, 7, 1);
  const auto [s, created] = store.add_sample_ex(bytes, {SampleSource::kFieldReport, std::nullopt, "pixel-7"});
  CHECK(created);
  CHECK(s.id == sha256_hex(bytes));
  CHECK(s.image_ref == s.id.substr(0, 2) + "/" + s.id + ".png");
  CHECK(s.label == Label::kUnlabeled);
  CHECK(s.split == Split::kUnassigned);
  CHECK(s.source == SampleSource::kFieldReport);
  CHECK(s.captured_at == kT0);
  CHECK(s.device_label == std::optional<std::string>("pixel-7"));
  CHECK_FALSE(s.augmentation_of.has_value());

  const auto [again, created_again] = store.add_sample_ex(bytes, {SampleSource::kWeb, std::nullopt, std::nullopt});
  CHECK_FALSE(created_again);
  CHECK(again == s);
  CHECK(blob_files(tmp.path()).size() == 1);
  CHECK(store.read_blob(s.id) == bytes);
  CHECK(store.get(s.id) == s);
  CHECK(capture_error([&] { store.get("00"); }).code() == ErrorCode::kNotFound);
}

TEST_CASE("store: corrupt bytes store nothing") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  populate(store, 1, 1);
  const auto before = snapshot(store);
  const auto truncated = read_file(test::fixture("images/truncated.jpg"));
  CHECK(capture_error([&] { store.add_sample(truncated, {}); }).code() == ErrorCode::kDecode);
  CHECK(capture_error([&] { store.add_sample({1, 2, 3}, {}); }).code() == ErrorCode::kDecode);
  CHECK(snapshot(store) == before);
}

TEST_CASE("store: jpeg samples keep their bytes and extension") {
  test::TempDir tmp;
  DatasetStore store(tmp.path());
  const auto jpg = read_file(test::fixture("images/gradient_64x48.jpg"));
  const auto s = store.add_sample(jpg, {});
  CHECK(s.image_ref.ends_with(".jpg"));
  CHECK(store.read_blob(s.id) == jpg);
}

TEST_CASE("store: labels and audit trail") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto s = store.add_sample(test::noise_png(4, 4, 2), {});
  const auto w = store.set_label(s.id, Label::kWssv, "alice");
  CHECK(w.label == Label::kWssv);
  CHECK(store.get(s.id).label == Label::kWssv);
  auto audit = store.audit(s.id);
  REQUIRE(audit.size() == 1);
  CHECK(audit[0].who == "alice");
  CHECK(audit[0].at == kT0);
  CHECK(audit[0].old_label == Label::kUnlabeled);
  CHECK(audit[0].new_label == Label::kWssv);

  store.set_label(s.id, Label::kHealthy, "bob");
  audit = store.audit(s.id);
  REQUIRE(audit.size() == 2);
  CHECK(audit[1].old_label == Label::kWssv);
  CHECK(audit[1].new_label == Label::kHealthy);

  CHECK(capture_error([&] { store.set_label(std::string(64, 'a'), Label::kWssv); }).code() == ErrorCode::kNotFound);
  CHECK(capture_error([&] { store.audit(std::string(64, 'a')); }).code() == ErrorCode::kNotFound);
}

TEST_CASE("store: holdout assignment is exhaustive, atomic, idempotent") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto ids = populate(store, 20, 5);
  const auto split = eval::stratified_holdout(store_labels(store), 0.2, 3);
  CHECK(store.assign_splits(split) == 25);
  for (const auto& s : store.list()) CHECK(s.split != Split::kUnassigned);
  CHECK(store.list({std::nullopt, Split::kTest}).size() == 5);
  CHECK(store.assign_splits(split) == 0);

  const auto extra = store.add_sample(test::noise_png(6, 5, 999), {});
  auto with_unlabeled = eval::stratified_holdout(store_labels(store), 0.5, 4);
  with_unlabeled.test_ids.push_back(extra.id);
  std::sort(with_unlabeled.test_ids.begin(), with_unlabeled.test_ids.end());
  const auto before = snapshot(store);
  const auto err = capture_error([&] { store.assign_splits(with_unlabeled); });
  CHECK(err.code() == ErrorCode::kValidation);
  CHECK(snapshot(store) == before);

  auto unknown = split;
  unknown.train_ids.push_back(std::string(64, 'f'));
  CHECK(capture_error([&] { store.assign_splits(unknown); }).code() == ErrorCode::kNotFound);
  CHECK(snapshot(store) == before);
}

TEST_CASE("store: fold plan assignment") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  populate(store, 10, 5);
  const auto plan = eval::stratified_kfold(store_labels(store), 5, 1);
  CHECK(store.assign_splits(plan) == 15);
  for (const auto& s : store.list()) CHECK(s.fold == std::optional<int>(plan.assignments.at(s.id)));
  CHECK(store.assign_splits(plan) == 0);
  store.assign_splits(plan, 2);
  CHECK(store.list({std::nullopt, Split::kValidation}).size() == 3);
  CHECK(store.list({std::nullopt, Split::kTrain}).size() == 12);
  CHECK(capture_error([&] { store.assign_splits(plan, 5); }).code() == ErrorCode::kValidation);
}

TEST_CASE("store: augmented samples never reach validation or test") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto ids = populate(store, 4, 2);
  // A plan with an empty test side is still a valid assignment of splits.
  for (const auto& id : ids) store.assign_splits(eval::SplitAssignment{{id}, {}, 0.2, 0});

  std::vector<imaging::AugmentSpec> specs(2);
  specs[0].flip_horizontal = true;
  specs[1].rotation_degrees = 90.0;
  const auto copies = store.expand_training(specs, 5);
  CHECK(copies.size() == 12);
  for (const auto& c : copies) {
    CHECK(c.split == Split::kTrain);
    REQUIRE(c.augmentation_of.has_value());
    CHECK(c.label == store.get(*c.augmentation_of).label);
  }
  CHECK(store.expand_training(specs, 5).empty());  // already present

  const auto before = snapshot(store);
  // Plan moving an augmented copy into test.
  CHECK(capture_error([&] { store.assign_splits(eval::SplitAssignment{{}, {copies[0].id}, 0.2, 0}); }).code() ==
        ErrorCode::kLeakage);
  // Plan moving an origin (which has copies in train) into test.
  CHECK(capture_error([&] { store.assign_splits(eval::SplitAssignment{{}, {ids[0]}, 0.2, 0}); }).code() ==
        ErrorCode::kLeakage);
  CHECK(snapshot(store) == before);

  // The schema itself refuses the write, whatever the caller.
  db::Database raw(tmp / "dataset.db");
  CHECK(capture_error([&] { raw.exec("UPDATE samples SET split = 'test' WHERE augmentation_of IS NOT NULL"); })
            .code() == ErrorCode::kConflict);
  CHECK(capture_error([&] { raw.exec("UPDATE samples SET split = 'validation' WHERE augmentation_of IS NOT NULL"); })
            .code() == ErrorCode::kConflict);
  CHECK(snapshot(store) == before);
}

TEST_CASE("store: add_augmented guards") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto ids = populate(store, 1, 1);
  store.assign_splits(eval::SplitAssignment{{ids[0]}, {ids[1]}, 0.5, 0});

  imaging::LabeledImage copy;
  copy.image = test::noise_image(6, 5, 77);
  copy.encoded = imaging::encode_png(copy.image);
  copy.record.id = sha256_hex(copy.encoded);
  copy.record.label = Label::kHealthy;
  copy.record.split = Split::kTrain;
  copy.record.augmentation_of = ids[1];  // origin is in test
  CHECK(capture_error([&] { store.add_augmented(copy); }).code() == ErrorCode::kLeakage);
  copy.record.augmentation_of = std::string(64, 'e');
  CHECK(capture_error([&] { store.add_augmented(copy); }).code() == ErrorCode::kReference);
  copy.record.augmentation_of = ids[0];
  copy.record.split = Split::kTest;
  CHECK(capture_error([&] { store.add_augmented(copy); }).code() == ErrorCode::kLeakage);
  copy.record.split = Split::kTrain;
  CHECK(store.add_augmented(copy).augmentation_of == std::optional<std::string>(ids[0]));
  CHECK(blob_files(tmp.path()).size() == 3);
}

TEST_CASE("store: export filters and counts") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  auto empty = store.export_bundle({}, kT0);
  const auto m0 = manifest_from_json(nlohmann::json::parse(empty.manifest_json));
  CHECK(m0.samples.empty());
  CHECK(m0.counts == LabelCounts{});
  CHECK(read_tar(empty.archive).empty());

  populate(store, 6, 3);
  store.add_sample(test::noise_png(6, 5, 500), {});
  const auto all = store.export_bundle({}, kT0);
  const auto m = manifest_from_json(nlohmann::json::parse(all.manifest_json));
  CHECK(m.counts == LabelCounts{6, 3, 1});
  CHECK(m.samples.size() == 10);
  CHECK(std::is_sorted(m.samples.begin(), m.samples.end(),
                       [](const ImageSample& a, const ImageSample& b) { return a.id < b.id; }));
  const auto entries = read_tar(all.archive);
  CHECK(entries.size() == 10);
  for (const auto& e : entries) CHECK(sha256_hex(e.data) + e.name.substr(e.name.find('.')) == e.name);

  const auto wssv = store.export_bundle({Label::kWssv, std::nullopt}, kT0);
  const auto mw = manifest_from_json(nlohmann::json::parse(wssv.manifest_json));
  CHECK(mw.samples.size() == 3);
  for (const auto& s : mw.samples) CHECK(s.label == Label::kWssv);
  CHECK(mw.counts == LabelCounts{0, 3, 0});
  CHECK(read_tar(wssv.archive).size() == 3);
}

TEST_CASE("store: 411 healthy + 38 wssv") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  populate(store, 411, 38);
  const auto bundle = store.export_bundle({}, kT0);
  const auto m = manifest_from_json(nlohmann::json::parse(bundle.manifest_json));
  CHECK(m.counts.healthy == 411);
  CHECK(m.counts.wssv == 38);
  const auto split = eval::stratified_holdout(store_labels(store), 0.2, 0);
  CHECK(store.assign_splits(split) == 449);
  CHECK(store.list({Label::kWssv, Split::kTest}).size() == 8);
  CHECK(store.list({Label::kHealthy, Split::kTest}).size() == 82);
}

TEST_CASE("store: export -> import -> export is bit-exact") {
  test::TempDir a, b;
  DatasetStore src(a.path(), fixed_clock());
  const auto ids = populate(src, 5, 3);
  src.add_sample(read_file(test::fixture("images/gradient_64x48.jpg")), {SampleSource::kFieldReport, kT0, "cam"});
  src.assign_splits(eval::stratified_kfold(store_labels(src), 2, 4), 0);
  std::vector<imaging::AugmentSpec> specs(1);
  specs[0].flip_vertical = true;
  src.expand_training(specs, 1);

  const auto first = src.export_bundle({}, kT0);
  DatasetStore dst(b.path(), fixed_clock());
  const auto created = dst.import_bundle(first.manifest_json, first.archive);
  CHECK(created == src.list().size());
  const auto second = dst.export_bundle({}, kT0);
  CHECK(second.manifest_json == first.manifest_json);
  CHECK(second.archive == first.archive);
  CHECK(dst.import_bundle(first.manifest_json, first.archive) == 0);
  for (const auto& s : src.list()) CHECK(dst.read_blob(s.id) == src.read_blob(s.id));
}

TEST_CASE("store: import rejects bad bundles atomically") {
  test::TempDir a, b;
  DatasetStore src(a.path(), fixed_clock());
  populate(src, 3, 2);
  const auto good = src.export_bundle({}, kT0);
  DatasetStore dst(b.path(), fixed_clock());
  populate(dst, 1, 0, 100);
  const auto before = snapshot(dst);

  auto entries = read_tar(good.archive);
  auto tampered = entries;
  tampered[1].data[tampered[1].data.size() / 2] ^= 0xFF;
  CHECK(capture_error([&] { dst.import_bundle(good.manifest_json, write_tar(tampered)); }).code() ==
        ErrorCode::kIntegrity);

  auto missing = entries;
  missing.pop_back();
  CHECK(capture_error([&] { dst.import_bundle(good.manifest_json, write_tar(missing)); }).code() ==
        ErrorCode::kInput);

  auto extra = entries;
  const auto png = test::noise_png(3, 3, 4242);
  extra.push_back({sha256_hex(png) + ".png", png, 0});
  CHECK(capture_error([&] { dst.import_bundle(good.manifest_json, write_tar(extra)); }).code() == ErrorCode::kInput);

  auto j = nlohmann::json::parse(good.manifest_json);
  j["counts"]["wssv"] = 7;
  CHECK(capture_error([&] { dst.import_bundle(j.dump(), good.archive); }).code() == ErrorCode::kIntegrity);

  auto leak = nlohmann::json::parse(good.manifest_json);
  leak["samples"][0]["augmentation_of"] = leak["samples"][1]["id"];
  leak["samples"][0]["split"] = "test";
  CHECK(capture_error([&] { dst.import_bundle(leak.dump(), good.archive); }).code() == ErrorCode::kLeakage);

  CHECK(capture_error([&] { dst.import_bundle("{not json", good.archive); }).code() == ErrorCode::kInput);
  CHECK(snapshot(dst) == before);

  // A record that already exists with different fields is a conflict.
  dst.import_bundle(good.manifest_json, good.archive);
  auto relabeled = nlohmann::json::parse(good.manifest_json);
  const std::string id = relabeled["samples"][0]["id"];
  dst.set_label(id, dst.get(id).label == Label::kWssv ? Label::kHealthy : Label::kWssv);
  const auto after = snapshot(dst);
  CHECK(capture_error([&] { dst.import_bundle(good.manifest_json, good.archive); }).code() == ErrorCode::kConflict);
  CHECK(snapshot(dst) == after);
}

TEST_CASE("store: ids and records survive a restart") {
  test::TempDir tmp;
  std::vector<ImageSample> before;
  {
    DatasetStore store(tmp.path(), fixed_clock());
    populate(store, 3, 2);
    before = store.list();
  }
  DatasetStore reopened(tmp.path(), fixed_clock());
  CHECK(reopened.list() == before);
  const auto bytes = test::noise_png(6, 5, 0);  // first image populate() added
  const auto [again, created] = reopened.add_sample_ex(bytes, {});
  CHECK_FALSE(created);
  CHECK(again.id == sha256_hex(bytes));
  CHECK(reopened.list().size() == 5);
}

TEST_CASE("store: tampered blob is detected on read") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  const auto s = store.add_sample(test::noise_png(5, 5, 3), {});
  auto bytes = read_file(tmp / "blobs" / s.image_ref);
  bytes.back() ^= 1;
  write_file_atomic(tmp / "blobs" / s.image_ref, bytes);
  CHECK(capture_error([&] { store.read_blob(s.id); }).code() == ErrorCode::kIntegrity);
}

TEST_CASE("store: concurrent writers and readers") {
  test::TempDir tmp;
  DatasetStore store(tmp.path(), fixed_clock());
  std::vector<std::thread> threads;
  for (int t = 0; t < 4; ++t)
    threads.emplace_back([&, t] {
      for (int i = 0; i < 10; ++i) {
        // Threads overlap on half their images to exercise dedup under contention.
        store.add_sample(test::noise_png(5, 4, static_cast<std::uint64_t>((t % 2) * 100 + i)), {});
        store.list();
      }
    });
  for (auto& th : threads) th.join();
  CHECK(store.list().size() == 20);
  CHECK(blob_files(tmp.path()).size() == 20);
}

TEST_CASE("tar: round trip and corruption") {
  const std::vector<TarEntry> entries{{"a.png", {1, 2, 3}, 1700000000}, {"b.jpg", std::vector<std::uint8_t>(1000, 7), 5},
                                      {"empty.png", {}, 0}};
  const auto tar = write_tar(entries);
  CHECK(tar.size() % 512 == 0);
  CHECK(write_tar(entries) == tar);
  const auto back = read_tar(tar);
  REQUIRE(back.size() == 3);
  for (std::size_t i = 0; i < 3; ++i) {
    CHECK(back[i].name == entries[i].name);
    CHECK(back[i].data == entries[i].data);
    CHECK(back[i].mtime == entries[i].mtime);
  }
  auto bad = tar;
  bad[10] ^= 0x20;
  CHECK(capture_error([&] { read_tar(bad); }).code() == ErrorCode::kInput);
}

TEST_CASE("manifest json: invariants") {
  DatasetManifest m;
  m.created_at = kT0;
  ImageSample s;
  s.id = std::string(64, 'a');
  s.image_ref = "aa/" + s.id + ".png";
  s.label = Label::kWssv;
  s.captured_at = kT0;
  m.samples = {s};
  m.counts.wssv = 1;
  const auto j = to_json(m);
  CHECK(j.at("schema_version") == "1");
  CHECK(j.at("created_at") == "2026-03-01T08:00:00.000Z");
  const auto back = manifest_from_json(j);
  CHECK(back.samples == m.samples);
  auto dup = j;
  dup["samples"].push_back(dup["samples"][0]);
  dup["counts"]["wssv"] = 2;
  CHECK(capture_error([&] { manifest_from_json(dup); }).code() == ErrorCode::kValidation);
  CHECK(dump_manifest(back) == dump_manifest(m));
}
