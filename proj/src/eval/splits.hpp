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

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "json.hpp"

namespace wssv::eval {

// sample id -> class name. Ordered so that results never depend on input order.
using ClassLabels = std::map<std::string, std::string>;

struct FoldPlan {
  int k = 5;
  std::int64_t seed = 0;
  std::map<std::string, int> assignments;

  void validate() const;
  std::vector<std::string> fold_ids(int fold) const;
  bool operator==(const FoldPlan&) const = default;
};

struct SplitAssignment {
  std::vector<std::string> train_ids;  // sorted
  std::vector<std::string> test_ids;   // sorted
  double test_fraction = 0.2;
  std::int64_t seed = 0;

  void validate() const;
  bool operator==(const SplitAssignment&) const = default;
};

// Per-class test count: floor(fraction * n + 0.5).
std::size_t holdout_test_count(std::size_t class_size, double fraction);

SplitAssignment stratified_holdout(const ClassLabels& labels, double fraction = 0.2, std::int64_t seed = 0);
FoldPlan stratified_kfold(const ClassLabels& labels, int k = 5, std::int64_t seed = 0);

nlohmann::json to_json(const FoldPlan& plan);
nlohmann::json to_json(const SplitAssignment& split);
FoldPlan fold_plan_from_json(const nlohmann::json& j);
SplitAssignment split_assignment_from_json(const nlohmann::json& j);

// Accepts {"samples": [{"id": .., "label": ..}, ..]} (labels other than
// healthy/wssv are skipped) or a flat {"<id>": "<class>"} object.
ClassLabels class_labels_from_json(const nlohmann::json& j);

}  // namespace wssv::eval
