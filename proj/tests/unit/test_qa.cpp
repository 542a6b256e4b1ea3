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

#include <cmath>
#include <random>

#include "support.hpp"

#include "qa/latency.hpp"
#include "qa/parity.hpp"

using namespace wssv;
using namespace wssv::qa;
using wssv::test::capture_error;

namespace {

// Clock returning start/end pairs so timed runs take the scripted durations.
ClockFn scripted_clock(const std::vector<double>& durations, int* calls) {
  auto times = std::make_shared<std::vector<double>>();
  double t = 1000.0;
  for (double d : durations) {
    times->push_back(t);
    times->push_back(t + d);
    t += d + 5.0;
  }
  return [times, calls]() {
    const double v = times->at(static_cast<std::size_t>(*calls));
    ++*calls;
    return v;
  };
}

}  // namespace

TEST_CASE("parity: worked example") {
  const std::vector<double> ref{0.5, 0.7, 0.9}, cand{0.5, 0.72, 0.89};
  const auto s = compare_outputs(ref, cand);
  CHECK(s.count == 3);
  CHECK(std::abs(s.mean - 0.01) < 1e-12);
  CHECK(s.min == 0.0);
  CHECK(std::abs(s.max - 0.02) < 1e-12);
  // mpmath: sqrt(2/3) / 100
  CHECK(std::abs(s.stddev - 0.0081649658092772603) < 1e-12);
}

TEST_CASE("parity: identical vectors") {
  const std::vector<double> v{0.1, 0.2, 0.3, 0.99};
  const auto s = compare_outputs(v, v);
  CHECK(s.mean == 0.0);
  CHECK(s.stddev == 0.0);
  CHECK(s.min == 0.0);
  CHECK(s.max == 0.0);
}

TEST_CASE("parity: input errors") {
  const std::vector<double> a{0.1, 0.2}, b{0.1};
  CHECK(capture_error([&] { compare_outputs(a, b); }).code() == ErrorCode::kInput);
  CHECK(capture_error([] { compare_outputs({}, {}); }).code() == ErrorCode::kInput);
  const std::vector<double> nan{0.1, std::nan("")};
  CHECK(capture_error([&] { compare_outputs(a, nan); }).code() == ErrorCode::kInput);
}

TEST_CASE("parity: symmetry and scaling properties") {
  std::mt19937_64 gen(7);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t n = 1 + gen() % 40;
    std::vector<double> r(n), c(n), d(n), zeros(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      r[i] = u(gen);
      c[i] = u(gen);
      d[i] = u(gen) - 0.5;
    }
    const auto ab = compare_outputs(r, c), ba = compare_outputs(c, r);
    CHECK(ab.mean == ba.mean);
    CHECK(ab.stddev == ba.stddev);
    CHECK(ab.min == ba.min);
    CHECK(ab.max == ba.max);
    CHECK(ab.min <= ab.mean);
    CHECK(ab.mean <= ab.max);

    const auto base = compare_outputs(zeros, d);
    for (double k : {0.0, 0.25, 2.0, 8.0}) {  // powers of two scale exactly
      std::vector<double> kd(n);
      for (std::size_t i = 0; i < n; ++i) kd[i] = k * d[i];
      const auto s = compare_outputs(zeros, kd);
      CHECK(s.mean == k * base.mean);
      CHECK(s.stddev == doctest::Approx(k * base.stddev).epsilon(1e-12));
      CHECK(s.min == k * base.min);
      CHECK(s.max == k * base.max);
    }
    const double k = 0.3 + u(gen) * 3.0;
    std::vector<double> kd(n);
    for (std::size_t i = 0; i < n; ++i) kd[i] = k * d[i];
    const auto s = compare_outputs(zeros, kd);
    CHECK(s.mean == doctest::Approx(k * base.mean).epsilon(1e-12));
    CHECK(s.max == doctest::Approx(k * base.max).epsilon(1e-12));
  }
}

TEST_CASE("gate: reference envelope") {
  const ParityGate gate;  // 2e-3 / 1e-4
  ParityStats s;
  s.mean = 3.63e-05;
  s.max = 1.65e-03;
  s.count = 1;
  CHECK(gate_parity(s, gate).passed);

  s.max = 2.5e-03;
  const auto v = gate_parity(s, gate);
  CHECK_FALSE(v.passed);
  REQUIRE(v.violations.size() == 1);
  CHECK(v.violations[0].find("max") == 0);

  s.mean = 5e-4;
  CHECK(gate_parity(s, gate).violations.size() == 2);

  CHECK(gate_parity(ParityStats{}, gate).passed);
  const auto report = parity_report(s, gate, gate_parity(s, gate));
  CHECK(report.at("passed") == false);
  CHECK(report.at("violations").size() == 2);
  CHECK(report.at("gate").at("max_tolerance") == 2e-3);
}

TEST_CASE("gate: validation and monotonicity") {
  CHECK(capture_error([] { gate_parity({}, ParityGate{0.0, 1e-4}); }).code() == ErrorCode::kValidation);
  CHECK(capture_error([] { gate_parity({}, ParityGate{1e-4, 1e-3}); }).code() == ErrorCode::kValidation);
  std::mt19937_64 gen(3);
  std::uniform_real_distribution<double> u(1e-6, 1e-2);
  for (int i = 0; i < 500; ++i) {
    ParityStats s;
    s.mean = u(gen) / 10;
    s.max = s.mean + u(gen);
    ParityGate g{u(gen), 0};
    g.mean_tolerance = g.max_tolerance * 0.5 * std::uniform_real_distribution<double>(0.01, 1.0)(gen);
    const bool before = gate_parity(s, g).passed;
    ParityGate looser{g.max_tolerance * 1.5, g.mean_tolerance * 1.2};
    if (before) CHECK(gate_parity(s, looser).passed);
  }
}

TEST_CASE("score csv") {
  const auto rows = read_score_csv("input_id,score\na,0.5\nb,1e-3\r\n\nc, 0.25 \n");
  REQUIRE(rows.size() == 3);
  CHECK(rows[1].score == 1e-3);
  CHECK(rows[2].input_id == "c");
  CHECK(capture_error([] { read_score_csv("a,notanumber\n"); }).code() == ErrorCode::kInput);
  CHECK(capture_error([] { read_score_csv("a,0.1,extra\n"); }).code() == ErrorCode::kInput);

  const std::vector<ScoreRow> ref{{"a", 0.1}, {"b", 0.2}}, cand{{"b", 0.25}, {"a", 0.1}};
  const auto [r, c] = pair_by_id(ref, cand);
  CHECK(c[1] == 0.25);
  CHECK(capture_error([&] { pair_by_id(ref, {{"a", 0.1}}); }).code() == ErrorCode::kInput);
  CHECK(capture_error([&] { pair_by_id(ref, {{"a", 0.1}, {"a", 0.2}}); }).code() == ErrorCode::kInput);
}

TEST_CASE("latency: fake clock") {
  const auto h = test::load_fixture_model("constant_zero");
  const auto in = test::pattern_input(0);
  int calls = 0;
  const auto s = benchmark_latency(*h, in, 5, 2, scripted_clock({10, 12, 11, 9, 13}, &calls), "desk");
  CHECK(s.runs == 5);
  CHECK(s.warmup_runs == 2);
  CHECK(s.per_run == std::vector<double>{10, 12, 11, 9, 13});
  CHECK(s.mean == 11.0);
  CHECK(s.device_label == "desk");
  CHECK(calls == 10);  // warm-up runs read no clock

  calls = 0;
  const auto one = benchmark_latency(*h, in, 1, 0, scripted_clock({7}, &calls));
  CHECK(one.per_run == std::vector<double>{7});
  CHECK(one.mean == 7.0);

  const auto j = to_json(s);
  CHECK(j.at("mean_ms") == 11.0);
  CHECK(j.at("per_run_ms").size() == 5);
}

TEST_CASE("latency: defaults are 5 timed runs after 2 warm-ups") {
  CHECK(kDefaultRuns == 5);
  CHECK(kDefaultWarmup == 2);
  const auto h = test::load_fixture_model("constant_zero");
  int calls = 0;
  const auto s = benchmark_latency(*h, test::pattern_input(0), kDefaultRuns, kDefaultWarmup,
                                   scripted_clock({1, 2, 3, 4, 5}, &calls));
  CHECK(s.per_run.size() == 5);
  CHECK(s.mean == 3.0);
  const auto real = benchmark_latency(*h, test::pattern_input(0));
  CHECK(real.per_run.size() == 5);
  CHECK(real.device_label == "cpu");
  for (double ms : real.per_run) CHECK(ms >= 0.0);
}

TEST_CASE("latency: mean lies within the run range") {
  const auto h = test::load_fixture_model("constant_zero");
  std::mt19937_64 gen(1);
  std::uniform_real_distribution<double> u(0.1, 500.0);
  for (int i = 0; i < 50; ++i) {
    std::vector<double> d(1 + gen() % 8);
    for (auto& x : d) x = u(gen);
    int calls = 0;
    const auto s = benchmark_latency(*h, test::pattern_input(0), d.size(), 0, scripted_clock(d, &calls));
    CHECK(s.mean >= *std::min_element(s.per_run.begin(), s.per_run.end()));
    CHECK(s.mean <= *std::max_element(s.per_run.begin(), s.per_run.end()));
  }
}

TEST_CASE("latency: concurrent use is detected by the busy flag") {
  const auto h = test::load_fixture_model("constant_zero");
  const auto in = test::pattern_input(0);
  ErrorCode seen = ErrorCode::kOk;
  int calls = 0;
  const ClockFn intruding = [&] {
    if (calls++ == 0) seen = capture_error([&] { h->predict(in); }).code();
    return static_cast<double>(calls);
  };
  benchmark_latency(*h, in, 2, 0, intruding);
  CHECK(seen == ErrorCode::kBusy);
  CHECK(h->predict(in).score == 0.5);  // released afterwards

  calls = 0;
  ErrorCode nested = ErrorCode::kOk;
  const ClockFn nesting = [&] {
    if (calls++ == 0) nested = capture_error([&] { benchmark_latency(*h, in, 1, 0); }).code();
    return 0.0;
  };
  benchmark_latency(*h, in, 1, 0, nesting);
  CHECK(nested == ErrorCode::kBusy);
}

TEST_CASE("latency: failures abort with the run index") {
  const auto bad = test::load_fixture_model("constant_out_of_range");
  const auto in = test::pattern_input(0);
  auto err = capture_error([&] { benchmark_latency(*bad, in, 3, 0); });
  CHECK(err.code() == ErrorCode::kBenchmark);
  CHECK(std::string(err.what()).find("run 0") != std::string::npos);
  err = capture_error([&] { benchmark_latency(*bad, in, 3, 2); });
  CHECK(err.code() == ErrorCode::kBenchmark);
  CHECK(std::string(err.what()).find("warm-up run 0") != std::string::npos);

  const auto h = test::load_fixture_model("constant_zero");
  CHECK(capture_error([&] { benchmark_latency(*h, in, 0, 0); }).code() == ErrorCode::kValidation);
  CHECK(h->predict(in).score == 0.5);  // flag released after an abort
}
