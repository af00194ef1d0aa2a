// Copyright 2026 The UNCM Authors.
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

#ifndef UNCM_TESTS_ACCEPTANCE_BENCHMARK_H_
#define UNCM_TESTS_ACCEPTANCE_BENCHMARK_H_

#include <cstdint>
#include <filesystem>
#include <ostream>
#include <string>

#include "uncm/leak.h"
#include "uncm/leak_pipeline.h"
#include "uncm/param_set.h"
#include "uncm/password_model.h"
#include "uncm/trainer.h"
#include "uncm/uncm_model.h"

namespace uncm::bench {

// The synthetic two-community benchmark: 2 x 50 community leaks of 500
// accounts plus leaks whose emails carry no community signal.
struct BenchmarkConfig {
  pipeline::SynthSpec spec;
  double test_fraction = 0.2;
  double valid_fraction = 0.1;
  UncmConfig model;
  train::TrainConfig uncm_training;
  train::TrainConfig baseline_training;
  std::uint64_t rng_seed = 20260;

  static BenchmarkConfig Default();
};

struct Benchmark {
  LeakCollection train;
  LeakCollection valid;
  LeakCollection test;
  UncmModel uncm;
  UncmModel private_uncm;
  pwmodel::PasswordModelConfig baseline_config;
  nn::ParamSet baseline_params;
};

// Generates, splits and trains all three models. Progress lines go to `log`.
// When `cache` is non-empty, trained models are read from and written to
// that directory.
Benchmark BuildBenchmark(const BenchmarkConfig& config, std::ostream& log,
                         const std::filesystem::path& cache = {});

}  // namespace uncm::bench

#endif  // UNCM_TESTS_ACCEPTANCE_BENCHMARK_H_
