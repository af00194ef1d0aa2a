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

#ifndef UNCM_TRAINER_H_
#define UNCM_TRAINER_H_

#include <cstdint>
#include <functional>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "uncm/graph.h"
#include "uncm/leak.h"
#include "uncm/param_set.h"
#include "uncm/password_model.h"
#include "uncm/uncm_model.h"

namespace uncm::train {

struct TrainConfig {
  std::size_t k = 64;               // accounts per leak visit (seed and loss)
  std::size_t virtual_batch = 16;   // leaks per optimizer step
  std::size_t baseline_batch = 64;  // passwords per baseline step
  // Caps baseline steps per epoch; 0 means a full pass over the multiset.
  std::size_t baseline_steps_per_epoch = 0;
  nn::AdamConfig adam;
  std::size_t patience = 5;
  std::size_t max_epochs = 50;
  std::uint64_t rng_seed = 1;

  void Validate() const;
};

struct LogRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;
  double train_loss = 0.0;
  double valid_loss = 0.0;
};

// One JSON object per line: {"epoch":..,"step":..,"train_loss":..,"valid_loss":..}
std::string ToJsonLine(const LogRecord& record);

struct TrainResult {
  std::vector<LogRecord> log;
  std::size_t best_epoch = 0;
  double best_valid_loss = std::numeric_limits<double>::infinity();
  std::size_t epochs_run = 0;
};

// Early-stopping rule: stop once the validation loss has failed to improve on
// the best value for `patience` consecutive epochs.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);
  // Records the loss of `epoch`; returns true when training should stop.
  bool Update(std::size_t epoch, double valid_loss);
  // True when the last Update produced a new best.
  bool improved() const { return improved_; }
  std::size_t best_epoch() const { return best_epoch_; }
  double best_loss() const { return best_loss_; }

 private:
  std::size_t patience_;
  std::size_t bad_epochs_ = 0;
  std::size_t best_epoch_ = 0;
  double best_loss_ = std::numeric_limits<double>::infinity();
  bool improved_ = false;
};

// Accounts of a leak usable for training: parseable email and a password
// inside the model's key space.
struct PreparedLeak {
  std::string id;
  std::vector<encoder::EncodedInput> inputs;
  std::vector<std::string> passwords;
};

std::vector<PreparedLeak> PrepareLeaks(const UncmModel& model,
                                       const LeakCollection& collection);

// Mean per-password negative log-likelihood of `picked` accounts under the
// seed computed from those same accounts.
nn::Var LeakLoss(nn::Graph& g, const UncmModel& model, const PreparedLeak& leak,
                 std::span<const std::size_t> picked);

// Loss and gradients of one leak visit.
struct LeakGradient {
  double loss = 0.0;
  nn::GradMap grads;
};
LeakGradient LeakLossAndGradients(const UncmModel& model,
                                  const PreparedLeak& leak,
                                  std::span<const std::size_t> picked);

// Mean per-leak loss with a fixed subsample stream.
double ValidationLoss(const UncmModel& model,
                      std::span<const PreparedLeak> leaks, std::size_t k,
                      std::uint64_t rng_seed);

using EpochCallback = std::function<void(const LogRecord&, const UncmModel&)>;

// Joint leak-granularity training of encoder and password model. On return
// `model.params` holds the best-validation parameters. Throws NonFiniteError
// when a loss becomes NaN or infinite.
TrainResult TrainUncm(UncmModel& model, const LeakCollection& train,
                      const LeakCollection& valid, const TrainConfig& config,
                      const EpochCallback& on_epoch = {});

// Maximum-likelihood training of an unconditional password model on a
// password multiset. Passwords outside the key space are skipped.
using BaselineCallback =
    std::function<void(const LogRecord&, const nn::ParamSet&)>;
TrainResult TrainBaseline(nn::ParamSet& params,
                          const pwmodel::PasswordModelConfig& config,
                          std::span<const std::string> train,
                          std::span<const std::string> valid,
                          const TrainConfig& train_config,
                          const BaselineCallback& on_epoch = {});

// Mean per-password NLL of an unconditional model, computed in chunks.
double BaselineLoss(const nn::ParamSet& params,
                    const pwmodel::PasswordModelConfig& config,
                    std::span<const std::string> passwords);

}  // namespace uncm::train

#endif  // UNCM_TRAINER_H_
