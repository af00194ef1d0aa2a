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

#ifndef UNCM_MARKOV_H_
#define UNCM_MARKOV_H_

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "uncm/password_distribution.h"

namespace uncm::markov {

struct MarkovConfig {
  // Order m conditions on the previous m - 1 characters (START-padded).
  int order = 3;
  // Additive smoothing constant applied at query time.
  double smoothing = 0.01;
  // Fall back to lower orders when the context was seen fewer than
  // `backoff_threshold` times.
  bool backoff = false;
  std::size_t backoff_threshold = 10;
  std::size_t max_len = 30;
  // Closed vocabulary; empty means the characters seen in training.
  std::string alphabet;
};

// Character Markov chain over alphabet + END.
class MarkovModel : public PasswordDistribution {
 public:
  // Throws InvalidArgument when order < 1 or passwords is empty.
  static MarkovModel Train(std::span<const std::string> passwords,
                           const MarkovConfig& config);

  const MarkovConfig& config() const { return config_; }
  const std::string& alphabet() const { return alphabet_; }

  // P(next | history) where `next` is a character or '\0' for END.
  double ConditionalProb(std::string_view history, char next) const;
  // Order actually used for `history` (differs from `order` only with
  // backoff).
  int OrderUsed(std::string_view history) const;

  bool InKeySpace(std::string_view password) const override;
  // -infinity for strings with zero probability, including characters
  // outside the alphabet and over-length strings.
  double LogProb(std::string_view password) const override;
  std::vector<SampledPassword> Sample(std::mt19937_64& rng,
                                      std::size_t n) const override;

 private:
  struct Row {
    std::vector<std::uint32_t> counts;  // index 0 END, 1..A characters
    std::uint64_t total = 0;
  };
  using Table = std::unordered_map<std::string, Row>;

  MarkovModel() = default;
  std::string Context(std::string_view history, int order) const;
  const Row* Find(std::string_view history, int order) const;
  // Distribution over END + alphabet for a history.
  std::vector<double> Distribution(std::string_view history) const;
  int ClassOf(char c) const;

  MarkovConfig config_;
  std::string alphabet_;
  std::vector<int> class_of_;
  std::vector<Table> tables_;  // tables_[o - 1] holds order-o counts
};

// Minimum guess number across a pool of models. Throws InvalidArgument on an
// empty list.
double MinAuto(std::span<const double> guess_numbers);

}  // namespace uncm::markov

#endif  // UNCM_MARKOV_H_
