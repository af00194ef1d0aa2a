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

#ifndef UNCM_EVAL_H_
#define UNCM_EVAL_H_

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncm/guess_estimator.h"
#include "uncm/leak.h"
#include "uncm/password_distribution.h"
#include "uncm/uncm_model.h"

namespace uncm::eval {

// 10^0 .. 10^12.
std::vector<double> DefaultBudgets();

struct GuessingCurve {
  std::vector<double> budgets;
  std::vector<double> fractions;
};

// Fraction of guess numbers <= each budget. Infinite guess numbers are never
// reached. Throws InvalidArgument on empty input or unsorted budgets.
GuessingCurve CurveFromGuessNumbers(std::span<const double> guess_numbers,
                                    std::span<const double> budgets);

// Guess numbers of `passwords` under `model`; passwords outside the key space
// get +infinity.
std::vector<double> GuessNumbers(const guess::MCEstimator& estimator,
                                 const PasswordDistribution& model,
                                 std::span<const std::string> passwords);

GuessingCurve LeakCurve(const guess::MCEstimator& estimator,
                        const PasswordDistribution& model,
                        const CredentialLeak& leak,
                        std::span<const double> budgets);

// Pointwise mean. Throws InvalidArgument when the grids differ.
GuessingCurve AverageCurves(std::span<const GuessingCurve> curves);

// fraction_a / fraction_b at `budget`; nullopt when fraction_b is zero.
std::optional<double> GainRatio(const GuessingCurve& a, const GuessingCurve& b,
                                double budget);

struct NamedCurve {
  std::string name;
  GuessingCurve curve;
};

// Long format: "series,budget,fraction".
std::string CurvesToCsv(std::span<const NamedCurve> curves);
// Standalone SVG line chart with a log-scaled budget axis.
std::string CurvesToSvg(std::span<const NamedCurve> curves,
                        const std::string& title);

// Per-leak outcome of the seeded-versus-baseline attack.
struct LeakResult {
  std::string leak_id;
  std::string community;
  GuessingCurve seeded;
  GuessingCurve baseline;
  std::optional<GuessingCurve> private_seeded;
  std::optional<double> epsilon;
};

struct AttackConfig {
  std::size_t k = 64;
  std::size_t samples = guess::kDefaultSamples;
  std::vector<double> budgets = DefaultBudgets();
  std::uint64_t rng_seed = 1;
};

// Attacks every leak of `test` with a seed from its own accounts and with the
// baseline. When `private_model` is given, also with a private seed from it.
std::vector<LeakResult> RunAttack(
    const UncmModel& model, const PasswordDistribution& baseline,
    const LeakCollection& test, const AttackConfig& config,
    const UncmModel* private_model = nullptr,
    std::optional<DpParams> dp = std::nullopt);

}  // namespace uncm::eval

#endif  // UNCM_EVAL_H_
