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

#ifndef UNCM_MIA_H_
#define UNCM_MIA_H_

#include <cstdint>
#include <optional>
#include <random>
#include <vector>

#include "uncm/leak.h"
#include "uncm/param_set.h"
#include "uncm/tensor.h"
#include "uncm/uncm_model.h"

// Membership inference against configuration seeds: given psi and an email,
// decide whether the email was among the k accounts the seed was built from.
namespace uncm::eval {

struct MiaConfig {
  std::size_t k = 10;
  std::size_t seeds_per_leak = 10;
  std::size_t runs = 5;
  // Replace every seed by N(0, I) noise; accuracy should sit at chance.
  bool noise_seeds = false;
  // Private seeds from a kDpSigmoid model. The subsample is the member set,
  // so the account carries no amplification (q = 1).
  std::optional<DpParams> dp;
  std::size_t batch = 256;
  nn::AdamConfig adam;
  std::size_t max_epochs = 40;
  std::size_t patience = 4;
  double validation_fraction = 0.1;
  std::uint64_t rng_seed = 1;

  void Validate() const;
};

// Rows are psi || eta(email); labels are 1 for members. Balanced exactly.
struct MiaTriplets {
  nn::Tensor features;
  std::vector<int> labels;
  std::size_t seeds = 0;
  std::optional<double> epsilon;  // of the private seeds, when any
  std::optional<double> delta;
};

// Per leak, `seeds_per_leak` times: draw k members, build the seed from them
// and pair it with every member and with k non-members of the same leak.
// Leaks with fewer than 2k parseable accounts are skipped.
MiaTriplets BuildTriplets(const UncmModel& model, const LeakCollection& leaks,
                          const MiaConfig& config, std::mt19937_64& rng);

// Fully connected distinguisher
//   dense(512) -> [dense(320|160|80|40) -> batch-norm -> relu] -> dense(1)
// with a sigmoid head. Inputs are standardised with training statistics and
// batch-norm running statistics are frozen for evaluation.
class Distinguisher {
 public:
  Distinguisher(std::size_t input_dim, std::mt19937_64& rng);

  // Adam on binary cross-entropy with early stopping on a held-out slice of
  // the training rows; keeps the best epoch. Returns epochs run.
  std::size_t Fit(const MiaTriplets& train, const MiaConfig& config,
                  std::mt19937_64& rng);
  // Membership probabilities, one per row.
  std::vector<double> Predict(const nn::Tensor& features) const;
  double Accuracy(const MiaTriplets& data) const;

 private:
  struct BnStats {
    std::vector<double> mean;
    std::vector<double> var;
  };

  nn::ParamSet params_;
  std::vector<double> in_mean_, in_std_;
  std::vector<BnStats> bn_;
};

struct MiaResult {
  std::vector<double> accuracies;  // one per run
  double mean = 0.0;
  double stddev = 0.0;
  std::size_t train_rows = 0;
  std::size_t test_rows = 0;
  std::optional<double> epsilon;
  std::optional<double> delta;
};

// Trains on triplets from `train` and reports accuracy on triplets from
// `test`, over config.runs independent repetitions. Needs at least 20 leaks
// in total. Throws Conflict when dp is set on a non-private model.
MiaResult RunMia(const UncmModel& model, const LeakCollection& train,
                 const LeakCollection& test, const MiaConfig& config);

// Largest balanced accuracy any test can reach against an (epsilon, delta)-DP
// release: from TPR <= e^eps FPR + delta applied in both directions.
double DpAccuracyBound(double epsilon, double delta);
// One-sided upper confidence limit of DpAccuracyBound for an accuracy
// measured on n balanced trials.
double DpAccuracyLimit(double epsilon, double delta, std::size_t n,
                       double confidence = 0.99);

}  // namespace uncm::eval

#endif  // UNCM_MIA_H_
