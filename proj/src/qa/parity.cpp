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

#include "qa/parity.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "common/error.hpp"
#include "eval/csv.hpp"

namespace wssv::qa {

void ParityGate::validate() const {
  if (!(max_tolerance > 0.0)) fail_field(ErrorCode::kValidation, "max_tolerance", "must be > 0");
  if (!(mean_tolerance > 0.0)) fail_field(ErrorCode::kValidation, "mean_tolerance", "must be > 0");
  if (mean_tolerance > max_tolerance) {
    fail_field(ErrorCode::kValidation, "mean_tolerance", "must not exceed max_tolerance");
  }
}

ParityStats compare_outputs(std::span<const double> reference, std::span<const double> candidate) {
  if (reference.empty()) fail(ErrorCode::kInput, "no outputs to compare");
  if (reference.size() != candidate.size()) {
    fail(ErrorCode::kInput, "length mismatch: " + std::to_string(reference.size()) + " reference vs " +
                                std::to_string(candidate.size()) + " candidate outputs");
  }
  std::vector<double> diff(reference.size());
  for (std::size_t k = 0; k < diff.size(); ++k) {
    if (!std::isfinite(reference[k]) || !std::isfinite(candidate[k])) {
      fail(ErrorCode::kInput, "non-finite value at index " + std::to_string(k));
    }
    diff[k] = std::abs(reference[k] - candidate[k]);
  }
  ParityStats s;
  s.count = diff.size();
  const auto n = static_cast<double>(diff.size());
  double sum = 0.0;
  for (double d : diff) sum += d;
  s.mean = sum / n;
  double sq = 0.0;
  for (double d : diff) sq += (d - s.mean) * (d - s.mean);
  s.stddev = std::sqrt(sq / n);
  const auto [lo, hi] = std::minmax_element(diff.begin(), diff.end());
  s.min = *lo;
  s.max = *hi;
  // Summation rounding can put the mean a hair outside [min, max] when all
  // differences are equal.
  s.mean = std::clamp(s.mean, s.min, s.max);
  return s;
}

GateVerdict gate_parity(const ParityStats& stats, const ParityGate& gate) {
  gate.validate();
  GateVerdict v;
  auto fmt = [](double x) {
    std::ostringstream os;
    os.precision(6);
    os << x;
    return os.str();
  };
  if (stats.max > gate.max_tolerance) {
    v.violations.push_back("max " + fmt(stats.max) + " exceeds max_tolerance " + fmt(gate.max_tolerance));
  }
  if (stats.mean > gate.mean_tolerance) {
    v.violations.push_back("mean " + fmt(stats.mean) + " exceeds mean_tolerance " + fmt(gate.mean_tolerance));
  }
  v.passed = v.violations.empty();
  return v;
}

nlohmann::json to_json(const ParityStats& s) {
  return {{"mean", s.mean}, {"stddev", s.stddev}, {"min", s.min}, {"max", s.max}, {"count", s.count}};
}

nlohmann::json parity_report(const ParityStats& stats, const ParityGate& gate, const GateVerdict& verdict) {
  return {{"stats", to_json(stats)},
          {"gate", {{"max_tolerance", gate.max_tolerance}, {"mean_tolerance", gate.mean_tolerance}}},
          {"passed", verdict.passed},
          {"violations", verdict.violations}};
}

std::vector<ScoreRow> read_score_csv(const std::string& text) {
  const auto rows = eval::parse_csv(text);
  std::vector<ScoreRow> out;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    const auto& row = rows[r];
    if (row.size() != 2) fail(ErrorCode::kInput, "csv line " + std::to_string(r + 1) + ": expected 2 columns");
    if (r == 0 && row[1] == "score") continue;
    out.push_back({row[0], eval::parse_real(row[1], "line " + std::to_string(r + 1))});
  }
  return out;
}

std::pair<std::vector<double>, std::vector<double>> pair_by_id(const std::vector<ScoreRow>& reference,
                                                               const std::vector<ScoreRow>& candidate) {
  std::map<std::string, double> cand;
  for (const auto& row : candidate) {
    if (!cand.emplace(row.input_id, row.score).second) {
      fail(ErrorCode::kInput, "duplicate candidate id '" + row.input_id + "'");
    }
  }
  std::vector<double> a, b;
  std::map<std::string, bool> seen;
  for (const auto& row : reference) {
    if (!seen.emplace(row.input_id, true).second) fail(ErrorCode::kInput, "duplicate reference id '" + row.input_id + "'");
    auto it = cand.find(row.input_id);
    if (it == cand.end()) fail(ErrorCode::kInput, "id '" + row.input_id + "' missing from candidate");
    a.push_back(row.score);
    b.push_back(it->second);
  }
  if (cand.size() != reference.size()) fail(ErrorCode::kInput, "candidate has ids absent from reference");
  return {std::move(a), std::move(b)};
}

}  // namespace wssv::qa
