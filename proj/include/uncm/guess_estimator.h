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

#ifndef UNCM_GUESS_ESTIMATOR_H_
#define UNCM_GUESS_ESTIMATOR_H_

#include <cstdint>
#include <random>
#include <string_view>
#include <vector>

#include "uncm/password_distribution.h"
#include "uncm/password_model.h"

namespace uncm::guess {

inline constexpr std::size_t kDefaultSamples = 100'000;

// Monte Carlo guess-number estimator (Dell'Amico & Filippone). For a sample
// of n passwords with probabilities p_i the guess number of probability p is
// estimated as 1 + sum_{i : p_i > p} 1 / (n p_i).
class MCEstimator {
 public:
  // Builds from sample log-probabilities (any order).
  explicit MCEstimator(std::vector<double> sample_log_probs);

  std::size_t n() const { return log_probs_.size(); }
  // Sorted descending.
  const std::vector<double>& log_probs() const { return log_probs_; }
  // c_j = sum_{i <= j} 1 / (n p_i), nondecreasing.
  const std::vector<double>& cumulative() const { return cumulative_; }

  // Throws InvalidArgument unless 0 < p <= 1.
  double GuessNumber(double p) const;
  // Same estimate from a natural-log probability; -inf maps to +inf.
  double GuessNumberFromLogProb(double log_p) const;

  friend bool operator==(const MCEstimator&, const MCEstimator&) = default;

 private:
  std::vector<double> log_probs_;
  std::vector<double> cumulative_;
};

// Draws n samples from `model` and records their probabilities.
MCEstimator BuildEstimator(const PasswordDistribution& model, std::size_t n,
                           std::mt19937_64& rng);

// 1-based rank of `password` among all strings over `alphabet` of length at
// most `max_len`, by descending probability with lexicographic tie-break.
// Throws InvalidArgument when the password is outside that space.
std::uint64_t ExactGuessNumber(const pwmodel::SeededModel& model,
                               std::string_view password,
                               std::string_view alphabet, std::size_t max_len);

}  // namespace uncm::guess

#endif  // UNCM_GUESS_ESTIMATOR_H_
