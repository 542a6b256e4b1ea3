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

#include "eval/splits.hpp"

#include <algorithm>
#include <cmath>
#include <set>

#include "common/error.hpp"
#include "common/random.hpp"

namespace wssv::eval {

namespace {

// Classes in name order; ids within a class sorted.
std::map<std::string, std::vector<std::string>> group(const ClassLabels& labels) {
  std::map<std::string, std::vector<std::string>> by_class;
  for (const auto& [id, cls] : labels) {
    if (id.empty()) fail_field(ErrorCode::kValidation, "labels", "empty sample id");
    if (cls.empty()) fail_field(ErrorCode::kValidation, "labels", "empty class for '" + id + "'");
    by_class[cls].push_back(id);
  }
  return by_class;
}

// Each class gets its own stream derived from the seed and the class name so
// adding a class never reshuffles the others.
SeededRng class_rng(std::int64_t seed, const std::string& cls) {
  std::uint64_t h = 1469598103934665603ull;  // FNV-1a
  for (unsigned char c : cls) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return SeededRng(static_cast<std::uint64_t>(seed) ^ h);
}

}  // namespace

void FoldPlan::validate() const {
  if (k < 2) fail_field(ErrorCode::kValidation, "k", "must be >= 2");
  std::vector<int> sizes(static_cast<std::size_t>(k), 0);
  for (const auto& [id, fold] : assignments) {
    if (fold < 0 || fold >= k) {
      fail_field(ErrorCode::kValidation, "assignments", "fold " + std::to_string(fold) + " of '" + id + "' outside [0, k)");
    }
    ++sizes[static_cast<std::size_t>(fold)];
  }
  for (int f = 0; f < k; ++f) {
    if (sizes[static_cast<std::size_t>(f)] == 0) {
      fail_field(ErrorCode::kValidation, "assignments", "fold " + std::to_string(f) + " is empty");
    }
  }
}

std::vector<std::string> FoldPlan::fold_ids(int fold) const {
  std::vector<std::string> out;
  for (const auto& [id, f] : assignments)
    if (f == fold) out.push_back(id);
  return out;
}

void SplitAssignment::validate() const {
  if (!(test_fraction > 0.0 && test_fraction < 1.0)) {
    fail_field(ErrorCode::kValidation, "test_fraction", "must be in (0, 1)");
  }
  std::set<std::string> train(train_ids.begin(), train_ids.end());
  if (train.size() != train_ids.size()) fail_field(ErrorCode::kValidation, "train_ids", "duplicate id");
  std::set<std::string> test;
  for (const auto& id : test_ids) {
    if (!test.insert(id).second) fail_field(ErrorCode::kValidation, "test_ids", "duplicate id");
    if (train.contains(id)) fail_field(ErrorCode::kValidation, "test_ids", "'" + id + "' also in train_ids");
  }
}

std::size_t holdout_test_count(std::size_t class_size, double fraction) {
  return static_cast<std::size_t>(std::floor(fraction * static_cast<double>(class_size) + 0.5));
}

SplitAssignment stratified_holdout(const ClassLabels& labels, double fraction, std::int64_t seed) {
  if (!(fraction > 0.0 && fraction < 1.0)) fail_field(ErrorCode::kValidation, "fraction", "must be in (0, 1)");
  if (labels.empty()) fail(ErrorCode::kInput, "no labeled samples");
  SplitAssignment out;
  out.test_fraction = fraction;
  out.seed = seed;
  for (auto& [cls, ids] : group(labels)) {
    const auto n_test = holdout_test_count(ids.size(), fraction);
    if (n_test == 0 || n_test == ids.size()) {
      fail(ErrorCode::kStratification, "class '" + cls + "' with " + std::to_string(ids.size()) +
                                           " samples would get " + std::to_string(n_test) +
                                           " test samples at fraction " + std::to_string(fraction));
    }
    auto rng = class_rng(seed, cls);
    rng.shuffle(std::span<std::string>(ids));
    out.test_ids.insert(out.test_ids.end(), ids.begin(), ids.begin() + static_cast<std::ptrdiff_t>(n_test));
    out.train_ids.insert(out.train_ids.end(), ids.begin() + static_cast<std::ptrdiff_t>(n_test), ids.end());
  }
  std::sort(out.train_ids.begin(), out.train_ids.end());
  std::sort(out.test_ids.begin(), out.test_ids.end());
  return out;
}

FoldPlan stratified_kfold(const ClassLabels& labels, int k, std::int64_t seed) {
  if (k < 2) fail_field(ErrorCode::kValidation, "k", "must be >= 2");
  if (labels.empty()) fail(ErrorCode::kInput, "no labeled samples");
  FoldPlan plan;
  plan.k = k;
  plan.seed = seed;
  const auto uk = static_cast<std::size_t>(k);
  // Each class starts where the previous one stopped, so the remainders of
  // different classes land on different folds and total fold sizes stay
  // balanced too.
  std::size_t offset = 0;
  for (auto& [cls, ids] : group(labels)) {
    if (ids.size() < uk) {
      fail(ErrorCode::kStratification, "class '" + cls + "' has " + std::to_string(ids.size()) +
                                           " samples, fewer than k=" + std::to_string(k));
    }
    auto rng = class_rng(seed, cls);
    rng.shuffle(std::span<std::string>(ids));
    for (std::size_t i = 0; i < ids.size(); ++i) {
      plan.assignments[ids[i]] = static_cast<int>((offset + i) % uk);
    }
    offset = (offset + ids.size()) % uk;
  }
  return plan;
}

nlohmann::json to_json(const FoldPlan& plan) {
  nlohmann::json a = nlohmann::json::object();
  for (const auto& [id, f] : plan.assignments) a[id] = f;
  return {{"k", plan.k}, {"seed", plan.seed}, {"assignments", a}};
}

nlohmann::json to_json(const SplitAssignment& s) {
  return {{"test_fraction", s.test_fraction}, {"seed", s.seed}, {"train_ids", s.train_ids}, {"test_ids", s.test_ids}};
}

namespace {

template <typename T>
T field(const nlohmann::json& j, const char* key) {
  if (!j.contains(key)) fail_field(ErrorCode::kValidation, key, "missing");
  try {
    return j.at(key).get<T>();
  } catch (const nlohmann::json::exception&) {
    fail_field(ErrorCode::kValidation, key, "wrong type");
  }
}

}  // namespace

FoldPlan fold_plan_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "fold plan must be a JSON object");
  FoldPlan p;
  p.k = field<int>(j, "k");
  p.seed = j.contains("seed") ? field<std::int64_t>(j, "seed") : 0;
  const auto& a = j.contains("assignments") ? j.at("assignments") : nlohmann::json();
  if (!a.is_object()) fail_field(ErrorCode::kValidation, "assignments", "must be an object");
  for (const auto& [id, f] : a.items()) {
    if (!f.is_number_integer()) fail_field(ErrorCode::kValidation, "assignments", "fold of '" + id + "' must be an integer");
    p.assignments[id] = f.get<int>();
  }
  p.validate();
  return p;
}

SplitAssignment split_assignment_from_json(const nlohmann::json& j) {
  if (!j.is_object()) fail(ErrorCode::kValidation, "split assignment must be a JSON object");
  SplitAssignment s;
  s.train_ids = field<std::vector<std::string>>(j, "train_ids");
  s.test_ids = field<std::vector<std::string>>(j, "test_ids");
  s.test_fraction = j.contains("test_fraction") ? field<double>(j, "test_fraction") : 0.2;
  s.seed = j.contains("seed") ? field<std::int64_t>(j, "seed") : 0;
  std::sort(s.train_ids.begin(), s.train_ids.end());
  std::sort(s.test_ids.begin(), s.test_ids.end());
  s.validate();
  return s;
}

ClassLabels class_labels_from_json(const nlohmann::json& j) {
  ClassLabels out;
  if (j.is_object() && j.contains("samples")) {
    const auto& samples = j.at("samples");
    if (!samples.is_array()) fail_field(ErrorCode::kValidation, "samples", "must be an array");
    for (std::size_t i = 0; i < samples.size(); ++i) {
      const auto& s = samples[i];
      const std::string where = "samples[" + std::to_string(i) + "]";
      if (!s.is_object() || !s.contains("id") || !s.at("id").is_string()) {
        fail_field(ErrorCode::kValidation, where, "needs a string id");
      }
      const std::string label = s.value("label", "");
      if (label != "healthy" && label != "wssv") continue;
      if (!out.emplace(s.at("id").get<std::string>(), label).second) {
        fail_field(ErrorCode::kValidation, where, "duplicate id");
      }
    }
    return out;
  }
  if (!j.is_object()) fail(ErrorCode::kValidation, "labels must be a JSON object");
  for (const auto& [id, cls] : j.items()) {
    if (!cls.is_string()) fail_field(ErrorCode::kValidation, id, "class must be a string");
    out[id] = cls.get<std::string>();
  }
  return out;
}

}  // namespace wssv::eval
