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

#ifndef UNCM_PASSWORD_DISTRIBUTION_H_
#define UNCM_PASSWORD_DISTRIBUTION_H_

#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace uncm {

struct SampledPassword {
  std::string password;
  double log_prob = 0.0;  // natural log
  double probability = 0.0;
};

// A probability mass function over a key space that can be sampled. Neural
// and Markov models both implement it, so the Monte Carlo estimator and the
// evaluation harness accept either.
class PasswordDistribution {
 public:
  virtual ~PasswordDistribution() = default;

  virtual bool InKeySpace(std::string_view password) const = 0;
  // Natural-log probability. Throws UnsupportedPassword outside the key space.
  virtual double LogProb(std::string_view password) const = 0;
  // Batch form; passwords outside the key space get -infinity.
  virtual std::vector<double> LogProbs(
      std::span<const std::string> passwords) const;
  // n i.i.d. ancestral samples.
  virtual std::vector<SampledPassword> Sample(std::mt19937_64& rng,
                                              std::size_t n) const = 0;
};

}  // namespace uncm

#endif  // UNCM_PASSWORD_DISTRIBUTION_H_
