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

#include "uncm/guess_estimator.h"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>

#include "uncm/errors.h"

namespace uncm::guess {

namespace {

constexpr double kTieTolerance = 1e-12;

}  // namespace

MCEstimator::MCEstimator(std::vector<double> sample_log_probs)
    : log_probs_(std::move(sample_log_probs)) {
  if (log_probs_.empty()) throw InvalidArgument("estimator needs samples");
  std::sort(log_probs_.begin(), log_probs_.end(), std::greater<>());
  const auto n = static_cast<double>(log_probs_.size());
  cumulative_.resize(log_probs_.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < log_probs_.size(); ++i) {
    acc += std::exp(-log_probs_[i]) / n;
    cumulative_[i] = acc;
  }
}

double MCEstimator::GuessNumber(double p) const {
  if (!(p > 0 && p <= 1)) {
    throw InvalidArgument("guess_number: probability must lie within (0, 1]");
  }
  return GuessNumberFromLogProb(std::log(p));
}

double MCEstimator::GuessNumberFromLogProb(double log_p) const {
  if (log_p == -std::numeric_limits<double>::infinity()) {
    return std::numeric_limits<double>::infinity();
  }
  // Number of samples with log p_i > log_p (strict). Values within a few ulps
  // count as equal so the same string scored by two code paths ties.
  const double cut = log_p + kTieTolerance * std::max(1.0, std::abs(log_p));
  const auto it = std::lower_bound(log_probs_.begin(), log_probs_.end(), cut,
                                   std::greater<>());
  const auto count = static_cast<std::size_t>(it - log_probs_.begin());
  return count == 0 ? 1.0 : 1.0 + cumulative_[count - 1];
}

MCEstimator BuildEstimator(const PasswordDistribution& model, std::size_t n,
                           std::mt19937_64& rng) {
  if (n == 0) throw InvalidArgument("estimator sample size must be >= 1");
  const auto samples = model.Sample(rng, n);
  std::vector<double> lps;
  lps.reserve(samples.size());
  for (const auto& s : samples) lps.push_back(s.log_prob);
  return MCEstimator(std::move(lps));
}

std::uint64_t ExactGuessNumber(const pwmodel::SeededModel& model,
                               std::string_view password,
                               std::string_view alphabet, std::size_t max_len) {
  if (password.size() > max_len ||
      !std::all_of(password.begin(), password.end(), [&](char c) {
        return alphabet.find(c) != std::string_view::npos;
      })) {
    throw InvalidArgument("password lies outside the enumerated space");
  }
  const auto ranked = pwmodel::EnumerateExact(model, alphabet, max_len);
  for (std::size_t i = 0; i < ranked.size(); ++i) {
    if (ranked[i].password == password) return i + 1;
  }
  throw InvalidArgument("password lies outside the enumerated space");
}

}  // namespace uncm::guess
