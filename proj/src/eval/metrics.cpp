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

#include "eval/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "common/error.hpp"
#include "eval/csv.hpp"

namespace wssv::eval {

namespace {

void check_items(const std::vector<LabeledScore>& items) {
  if (items.empty()) fail(ErrorCode::kInput, "no scored items");
  for (std::size_t i = 0; i < items.size(); ++i) {
    const double s = items[i].score;
    if (!(s >= 0.0 && s <= 1.0)) {
      fail(ErrorCode::kInput, "item " + std::to_string(i) + " ('" + items[i].sample_id + "'): score " +
                                  std::to_string(s) + " outside [0, 1]");
    }
  }
}

}  // namespace

ConfusionMatrix confusion(const std::vector<LabeledScore>& items, double threshold) {
  check_items(items);
  ConfusionMatrix cm;
  for (const auto& it : items) {
    const bool predicted = it.score >= threshold;
    if (it.positive) (predicted ? cm.tp : cm.fn)++;
    else (predicted ? cm.fp : cm.tn)++;
  }
  return cm;
}

F1Result f1_score(const ConfusionMatrix& cm) {
  if (cm.total() == 0) fail(ErrorCode::kInput, "empty confusion matrix");
  const auto denom = 2 * cm.tp + cm.fp + cm.fn;
  if (denom == 0) return {0.0, true};
  return {static_cast<double>(2 * cm.tp) / static_cast<double>(denom), false};
}

double fnr(const ConfusionMatrix& cm) {
  if (cm.tp + cm.fn == 0) fail(ErrorCode::kUndefinedMetric, "FNR undefined: no actual positives");
  return static_cast<double>(cm.fn) / static_cast<double>(cm.fn + cm.tp);
}

double auc_roc(const std::vector<LabeledScore>& items) {
  check_items(items);
  std::vector<std::size_t> order(items.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return items[a].score < items[b].score; });
  // Mann-Whitney U from midranks; ties share the average rank.
  double pos_rank_sum = 0.0;
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < order.size();) {
    std::size_t j = i;
    while (j < order.size() && items[order[j]].score == items[order[i]].score) ++j;
    const double midrank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
    for (std::size_t t = i; t < j; ++t) {
      if (items[order[t]].positive) {
        pos_rank_sum += midrank;
        ++n_pos;
      }
    }
    i = j;
  }
  const std::size_t n_neg = items.size() - n_pos;
  if (n_pos == 0 || n_neg == 0) fail(ErrorCode::kUndefinedMetric, "AUC undefined: single-class input");
  const double np = static_cast<double>(n_pos), nn = static_cast<double>(n_neg);
  const double u = pos_rank_sum - np * (np + 1.0) / 2.0;
  return u / (np * nn);
}

MetricsSummary aggregate_folds(const std::vector<FoldMetrics>& per_fold) {
  if (per_fold.empty()) fail(ErrorCode::kInput, "no folds to aggregate");
  MetricsSummary s;
  s.per_fold = per_fold;
  const double n = static_cast<double>(per_fold.size());
  auto stats = [&](auto get, double& mean, double& sd) {
    double sum = 0.0;
    for (const auto& f : per_fold) sum += get(f);
    mean = sum / n;
    double sq = 0.0;
    for (const auto& f : per_fold) sq += (get(f) - mean) * (get(f) - mean);
    sd = std::sqrt(sq / n);
  };
  stats([](const FoldMetrics& f) { return f.f1; }, s.mean.f1, s.stddev.f1);
  stats([](const FoldMetrics& f) { return f.auc; }, s.mean.auc, s.stddev.auc);
  stats([](const FoldMetrics& f) { return f.fnr; }, s.mean.fnr, s.stddev.fnr);
  return s;
}

MetricsSummary evaluate_run(const FoldPlan& plan, const std::map<int, std::vector<LabeledScore>>& scores,
                            double threshold) {
  if (!(threshold >= 0.0 && threshold <= 1.0)) fail_field(ErrorCode::kValidation, "threshold", "must be in [0, 1]");
  if (plan.k < 1) fail_field(ErrorCode::kValidation, "k", "must be >= 1");
  for (const auto& [fold, _] : scores) {
    if (fold < 0 || fold >= plan.k) fail(ErrorCode::kInput, "scores for fold " + std::to_string(fold) + " not in plan");
  }
  std::vector<FoldMetrics> per_fold;
  for (int f = 0; f < plan.k; ++f) {
    auto it = scores.find(f);
    if (it == scores.end()) fail(ErrorCode::kInput, "missing scores for fold " + std::to_string(f));
    try {
      const auto cm = confusion(it->second, threshold);
      const auto f1 = f1_score(cm);
      FoldMetrics m;
      m.f1 = f1.value;
      m.f1_degenerate = f1.degenerate;
      m.auc = auc_roc(it->second);
      m.fnr = fnr(cm);
      per_fold.push_back(m);
    } catch (const Error& e) {
      fail(e.code(), "fold " + std::to_string(f) + ": " + e.what());
    }
  }
  return aggregate_folds(per_fold);
}

nlohmann::json to_json(const ConfusionMatrix& cm) {
  return {{"tp", cm.tp}, {"fp", cm.fp}, {"tn", cm.tn}, {"fn", cm.fn}};
}

namespace {

nlohmann::json triple_json(const MetricTriple& t) { return {{"f1", t.f1}, {"auc", t.auc}, {"fnr", t.fnr}}; }

MetricTriple triple_from(const nlohmann::json& j, const std::string& where) {
  try {
    return {j.at("f1").get<double>(), j.at("auc").get<double>(), j.at("fnr").get<double>()};
  } catch (const nlohmann::json::exception&) {
    fail_field(ErrorCode::kValidation, where, "needs numeric f1, auc and fnr");
  }
}

}  // namespace

nlohmann::json to_json(const MetricsSummary& s) {
  nlohmann::json folds = nlohmann::json::array();
  for (const auto& f : s.per_fold) {
    folds.push_back({{"f1", f.f1}, {"auc", f.auc}, {"fnr", f.fnr}, {"f1_degenerate", f.f1_degenerate}});
  }
  return {{"per_fold", folds}, {"mean", triple_json(s.mean)}, {"stddev", triple_json(s.stddev)}};
}

MetricsSummary metrics_summary_from_json(const nlohmann::json& j) {
  if (!j.is_object() || !j.contains("per_fold") || !j.at("per_fold").is_array()) {
    fail_field(ErrorCode::kValidation, "per_fold", "missing or not an array");
  }
  std::vector<FoldMetrics> folds;
  for (std::size_t i = 0; i < j.at("per_fold").size(); ++i) {
    const auto& f = j.at("per_fold")[i];
    const auto t = triple_from(f, "per_fold[" + std::to_string(i) + "]");
    folds.push_back({t.f1, t.auc, t.fnr, f.value("f1_degenerate", false)});
  }
  return aggregate_folds(folds);
}

std::string format_table(const MetricsSummary& s) {
  std::string out;
  char buf[128];
  std::snprintf(buf, sizeof(buf), "%-6s %-13s %-13s %-13s\n", "fold", "F1", "AUC", "FNR");
  out += buf;
  for (std::size_t i = 0; i < s.per_fold.size(); ++i) {
    const auto& f = s.per_fold[i];
    std::snprintf(buf, sizeof(buf), "%-6zu %-13.2f %-13.2f %-13.2f%s\n", i, f.f1, f.auc, f.fnr,
                  f.f1_degenerate ? "  (F1 degenerate)" : "");
    out += buf;
  }
  auto cell = [](double m, double sd) {
    char c[32];
    std::snprintf(c, sizeof(c), "%.2f \xC2\xB1 %.2f", m, sd);
    return std::string(c);
  };
  // "\xC2\xB1" is two bytes but one column, so pad by hand.
  auto pad = [](std::string c, std::size_t width) {
    std::size_t cols = c.size() - (c.find("\xC2\xB1") != std::string::npos ? 1 : 0);
    for (; cols < width; ++cols) c.push_back(' ');
    return c;
  };
  out += pad("mean", 7) + pad(cell(s.mean.f1, s.stddev.f1), 14) + pad(cell(s.mean.auc, s.stddev.auc), 14) +
         cell(s.mean.fnr, s.stddev.fnr) + "\n";
  return out;
}

std::vector<LabeledScore> read_labeled_scores_csv(const std::string& text) {
  const auto rows = parse_csv(text);
  std::vector<LabeledScore> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    const std::string where = "line " + std::to_string(r + 1);
    if (row.size() != 3) fail(ErrorCode::kInput, "csv " + where + ": expected 3 columns (sample_id, truth, score)");
    if (r == 0 && row[2] == "score") continue;
    LabeledScore s;
    s.sample_id = row[0];
    if (row[1] == "1" || row[1] == "wssv") s.positive = true;
    else if (row[1] == "0" || row[1] == "healthy") s.positive = false;
    else fail(ErrorCode::kInput, "csv " + where + ": truth must be 0/1 or healthy/wssv, got '" + row[1] + "'");
    s.score = parse_real(row[2], "csv " + where);
    if (s.score < 0.0 || s.score > 1.0) fail(ErrorCode::kInput, "csv " + where + ": score outside [0, 1]");
    out.push_back(std::move(s));
  }
  if (out.empty()) fail(ErrorCode::kInput, "csv contains no rows");
  return out;
}

}  // namespace wssv::eval
