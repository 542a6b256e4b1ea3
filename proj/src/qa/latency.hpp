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

#include <functional>
#include <string>
#include <vector>

#include "json.hpp"

#include "imaging/preprocess.hpp"
#include "inference/engine.hpp"

namespace wssv::qa {

// Monotonic time source in milliseconds; injected so tests can script it.
using ClockFn = std::function<double()>;
ClockFn steady_clock_ms();

struct LatencyStats {
  std::size_t runs = 0;
  std::size_t warmup_runs = 0;
  std::vector<double> per_run;  // ms
  double mean = 0.0;            // ms
  std::string device_label;
};

nlohmann::json to_json(const LatencyStats& stats);

inline constexpr std::size_t kDefaultRuns = 5;
inline constexpr std::size_t kDefaultWarmup = 2;

// Untimed warm-up passes, then `runs` sequential timed passes. Holds the
// handle's exclusive flag for the whole benchmark; a concurrent predict on
// the same handle fails with kBusy. Errors mid-run abort with kBenchmark
// naming the run index.
LatencyStats benchmark_latency(const inference::ModelHandle& handle, const imaging::ModelInput& input,
                               std::size_t runs = kDefaultRuns, std::size_t warmup = kDefaultWarmup,
                               const ClockFn& clock = steady_clock_ms(), std::string device_label = "cpu");

}  // namespace wssv::qa
