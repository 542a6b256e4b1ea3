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

#include <map>
#include <string>
#include <vector>

#include "json.hpp"

#include "eval/splits.hpp"

namespace wssv::eval {

struct LabeledScore {
  std::string sample_id;
  bool positive = false;  // wssv
  double score = 0.0;
};

struct ConfusionMatrix {
  std::size_t tp = 0, fp = 0, tn = 0, fn = 0;

  std::size_t total() const { return tp + fp + tn + fn; }
  bool operator==(const ConfusionMatrix&) const = default;
};

struct F1Result {
  double value = 0.0;
  bool degenerate = false;  // 2tp + fp + fn == 0
};

struct FoldMetrics {
  double f1 = 0.0;
  double auc = 0.0;
  double fnr = 0.0;
  bool f1_degenerate = false;
};

struct MetricTriple {
  double f1 = 0.0, auc = 0.0, fnr = 0.0;
};

struct MetricsSummary {
  std::vector<FoldMetrics> per_fold;
  MetricTriple mean;
  MetricTriple stddev;  // population
};

ConfusionMatrix confusion(const std::vector<LabeledScore>& items, double threshold);
F1Result f1_score(const ConfusionMatrix& cm);
double fnr(const ConfusionMatrix& cm);
double auc_roc(const std::vector<LabeledScore>& items);
MetricsSummary aggregate_folds(const std::vector<FoldMetrics>& per_fold);

// `scores` keyed by fold index; every fold of the plan must be present.
MetricsSummary evaluate_run(const FoldPlan& plan, const std::map<int, std::vector<LabeledScore>>& scores,
                            double threshold = 0.5);

nlohmann::json to_json(const ConfusionMatrix& cm);
nlohmann::json to_json(const MetricsSummary& s);
MetricsSummary metrics_summary_from_json(const nlohmann::json& j);

// Fold rows then a "mean ± std" row, two decimals.
std::string format_table(const MetricsSummary& s);

// Rows of (sample_id, truth, score); truth is 0/1 or healthy/wssv.
// A header row whose third column reads "score" is skipped.
std::vector<LabeledScore> read_labeled_scores_csv(const std::string& text);

}  // namespace wssv::eval
