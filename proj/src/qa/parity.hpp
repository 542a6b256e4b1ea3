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

#include <span>
#include <string>
#include <vector>

#include "json.hpp"

namespace wssv::qa {

// Statistics of |reference - candidate| over paired outputs.
struct ParityStats {
  double mean = 0.0;
  double stddev = 0.0;  // population
  double min = 0.0;
  double max = 0.0;
  std::size_t count = 0;
};

// Defaults calibrated on the worst converted model observed in practice
// (max 1.65e-03, mean 3.63e-05).
struct ParityGate {
  double max_tolerance = 2e-3;
  double mean_tolerance = 1e-4;

  void validate() const;
};

struct GateVerdict {
  bool passed = true;
  std::vector<std::string> violations;
};

ParityStats compare_outputs(std::span<const double> reference, std::span<const double> candidate);
GateVerdict gate_parity(const ParityStats& stats, const ParityGate& gate);

nlohmann::json to_json(const ParityStats& stats);
nlohmann::json parity_report(const ParityStats& stats, const ParityGate& gate, const GateVerdict& verdict);

// Rows of (input_id, score), header optional.
struct ScoreRow {
  std::string input_id;
  double score = 0.0;
};
std::vector<ScoreRow> read_score_csv(const std::string& text);

// Joins by input_id; every id must appear in both sets exactly once.
// Returns (reference, candidate) in reference order.
std::pair<std::vector<double>, std::vector<double>> pair_by_id(const std::vector<ScoreRow>& reference,
                                                               const std::vector<ScoreRow>& candidate);

}  // namespace wssv::qa
