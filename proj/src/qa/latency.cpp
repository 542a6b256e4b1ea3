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

#include "qa/latency.hpp"

#include <chrono>

#include "common/error.hpp"

namespace wssv::qa {

ClockFn steady_clock_ms() {
  return [] {
    return std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now().time_since_epoch()).count();
  };
}

nlohmann::json to_json(const LatencyStats& s) {
  return {{"runs", s.runs},
          {"warmup_runs", s.warmup_runs},
          {"per_run_ms", s.per_run},
          {"mean_ms", s.mean},
          {"device_label", s.device_label}};
}

LatencyStats benchmark_latency(const inference::ModelHandle& handle, const imaging::ModelInput& input,
                               std::size_t runs, std::size_t warmup, const ClockFn& clock,
                               std::string device_label) {
  if (runs < 1) fail_field(ErrorCode::kValidation, "runs", "must be >= 1");
  inference::ExclusiveUse lock(handle);

  auto run_once = [&](const char* phase, std::size_t index) {
    try {
      lock.predict(input);
    } catch (const Error& e) {
      fail(ErrorCode::kBenchmark,
           std::string(phase) + " run " + std::to_string(index) + " failed: " + std::string(e.what()));
    }
  };

  for (std::size_t k = 0; k < warmup; ++k) run_once("warm-up", k);

  LatencyStats s;
  s.runs = runs;
  s.warmup_runs = warmup;
  s.device_label = std::move(device_label);
  s.per_run.reserve(runs);
  double total = 0.0;
  for (std::size_t k = 0; k < runs; ++k) {
    const double start = clock();
    run_once("timed", k);
    const double elapsed = clock() - start;
    s.per_run.push_back(elapsed);
    total += elapsed;
  }
  s.mean = total / static_cast<double>(runs);
  return s;
}

}  // namespace wssv::qa
