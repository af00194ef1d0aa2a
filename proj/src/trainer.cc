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

#include "uncm/trainer.h"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

#include "uncm/errors.h"

namespace uncm::train {

namespace {

constexpr std::uint64_t kValidStream = 0x5eed5eed5eedULL;
constexpr std::size_t kBaselineEvalChunk = 512;

void CheckLoss(double loss, const std::string& where) {
  if (!std::isfinite(loss)) {
    std::ostringstream os;
    os << "non-finite training loss " << loss << " at " << where;
    throw NonFiniteError(os.str());
  }
}

bool InKeySpace(const pwmodel::CharVocab& vocab, std::size_t max_len,
                const std::string& pw) {
  return pw.size() <= max_len &&
         std::all_of(pw.begin(), pw.end(),
                     [&](char c) { return vocab.Contains(c); });
}

}  // namespace

void TrainConfig::Validate() const {
  if (k == 0) throw InvalidArgument("train: k must be >= 1");
  if (virtual_batch == 0) throw InvalidArgument("train: virtual batch must be >= 1");
  if (baseline_batch == 0) throw InvalidArgument("train: baseline batch must be >= 1");
  if (patience == 0) throw InvalidArgument("train: patience must be >= 1");
  if (max_epochs == 0) throw InvalidArgument("train: max_epochs must be >= 1");
}

std::string ToJsonLine(const LogRecord& record) {
  nlohmann::json j = {{"epoch", record.epoch},
                      {"step", record.step},
                      {"train_loss", record.train_loss},
                      {"valid_loss", record.valid_loss}};
  return j.dump();
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience == 0) throw InvalidArgument("patience must be >= 1");
}

bool EarlyStopping::Update(std::size_t epoch, double valid_loss) {
  improved_ = valid_loss < best_loss_;
  if (improved_) {
    best_loss_ = valid_loss;
    best_epoch_ = epoch;
    bad_epochs_ = 0;
    return false;
  }
  return ++bad_epochs_ >= patience_;
}

std::vector<PreparedLeak> PrepareLeaks(const UncmModel& model,
                                       const LeakCollection& collection) {
  const pwmodel::CharVocab vocab = model.config.password.vocab();
  std::vector<PreparedLeak> out;
  for (const CredentialLeak& leak : collection.leaks) {
    PreparedLeak p;
    p.id = leak.id;
    for (const Account& a : leak.accounts) {
      if (!InKeySpace(vocab, model.config.password.max_len, a.password)) continue;
      try {
        p.inputs.push_back(
            encoder::Tokenize(a, model.config.encoder, model.vocabs));
      } catch (const MalformedEmail&) {
        continue;
      }
      p.passwords.push_back(a.password);
    }
    if (!p.inputs.empty()) out.push_back(std::move(p));
  }
  return out;
}

nn::Var LeakLoss(nn::Graph& g, const UncmModel& model, const PreparedLeak& leak,
                 std::span<const std::size_t> picked) {
  if (picked.empty()) throw InvalidArgument("leak loss: empty subsample");
  std::vector<encoder::EncodedInput> inputs;
  std::vector<std::string> passwords;
  for (std::size_t i : picked) {
    inputs.push_back(leak.inputs.at(i));
    passwords.push_back(leak.passwords.at(i));
  }
  const nn::Var psi = SeedOnGraph(g, model.config, inputs);
  const std::vector<double> weights(passwords.size(),
                                    1.0 / static_cast<double>(passwords.size()));
  return pwmodel::TeacherForcedLoss(g, model.config.password,
                                    model.config.password.vocab(), passwords,
                                    weights, psi);
}

LeakGradient LeakLossAndGradients(const UncmModel& model,
                                  const PreparedLeak& leak,
                                  std::span<const std::size_t> picked) {
  nn::Graph g(&model.params);
  const nn::Var loss = LeakLoss(g, model, leak, picked);
  LeakGradient out;
  out.loss = g.value(loss)[0];
  CheckLoss(out.loss, "leak " + leak.id);
  out.grads = g.Backward(loss);
  return out;
}

double ValidationLoss(const UncmModel& model,
                      std::span<const PreparedLeak> leaks, std::size_t k,
                      std::uint64_t rng_seed) {
  if (leaks.empty()) throw InvalidArgument("validation: no usable leaks");
  std::mt19937_64 rng(rng_seed);
  double total = 0.0;
  for (const PreparedLeak& leak : leaks) {
    const auto picked = SubsampleIndices(leak.inputs.size(), k, rng);
    nn::Graph g(&model.params);
    total += g.value(LeakLoss(g, model, leak, picked))[0];
  }
  return total / static_cast<double>(leaks.size());
}

TrainResult TrainUncm(UncmModel& model, const LeakCollection& train,
                      const LeakCollection& valid, const TrainConfig& config,
                      const EpochCallback& on_epoch) {
  config.Validate();
  const std::vector<PreparedLeak> train_leaks = PrepareLeaks(model, train);
  const std::vector<PreparedLeak> valid_leaks = PrepareLeaks(model, valid);
  if (train_leaks.empty()) throw InvalidArgument("train: no usable training leaks");
  if (valid_leaks.empty()) throw InvalidArgument("train: no usable validation leaks");

  std::mt19937_64 rng(config.rng_seed);
  const std::uint64_t valid_seed = config.rng_seed ^ kValidStream;
  EarlyStopping stopper(config.patience);
  nn::ParamSet best = model.params;
  TrainResult result;
  std::size_t step = 0;
  std::vector<std::size_t> order(train_leaks.size());
  std::iota(order.begin(), order.end(), 0);

  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size();
         begin += config.virtual_batch) {
      const std::size_t end = std::min(order.size(), begin + config.virtual_batch);
      nn::GradMap acc = model.params.ZeroGrads();
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (std::size_t b = begin; b < end; ++b) {
        const PreparedLeak& leak = train_leaks[order[b]];
        const auto picked = SubsampleIndices(leak.inputs.size(), config.k, rng);
        LeakGradient lg = LeakLossAndGradients(model, leak, picked);
        epoch_loss += lg.loss;
        nn::Accumulate(acc, lg.grads, scale);
      }
      nn::AdamUpdate(model.params, acc, config.adam);
      ++step;
    }
    LogRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.train_loss = epoch_loss / static_cast<double>(order.size());
    rec.valid_loss = ValidationLoss(model, valid_leaks, config.k, valid_seed);
    CheckLoss(rec.valid_loss, "validation of epoch " + std::to_string(epoch));
    result.log.push_back(rec);
    result.epochs_run = epoch;
    const bool stop = stopper.Update(epoch, rec.valid_loss);
    if (stopper.improved()) best = model.params;
    if (on_epoch) on_epoch(rec, model);
    if (stop) break;
  }
  model.params = std::move(best);
  result.best_epoch = stopper.best_epoch();
  result.best_valid_loss = stopper.best_loss();
  return result;
}

double BaselineLoss(const nn::ParamSet& params,
                    const pwmodel::PasswordModelConfig& config,
                    std::span<const std::string> passwords) {
  if (passwords.empty()) throw InvalidArgument("baseline loss: no passwords");
  const pwmodel::CharVocab vocab = config.vocab();
  double total = 0.0;
  for (std::size_t begin = 0; begin < passwords.size();
       begin += kBaselineEvalChunk) {
    const std::size_t end =
        std::min(passwords.size(), begin + kBaselineEvalChunk);
    const std::vector<double> w(end - begin, 1.0);
    nn::Graph g(&params);
    total += g.value(pwmodel::TeacherForcedLoss(
        g, config, vocab, passwords.subspan(begin, end - begin), w,
        std::nullopt))[0];
  }
  return total / static_cast<double>(passwords.size());
}

TrainResult TrainBaseline(nn::ParamSet& params,
                          const pwmodel::PasswordModelConfig& config,
                          std::span<const std::string> train,
                          std::span<const std::string> valid,
                          const TrainConfig& train_config,
                          const BaselineCallback& on_epoch) {
  train_config.Validate();
  const pwmodel::CharVocab vocab = config.vocab();
  auto usable = [&](std::span<const std::string> in) {
    std::vector<std::string> out;
    for (const auto& pw : in) {
      if (InKeySpace(vocab, config.max_len, pw)) out.push_back(pw);
    }
    return out;
  };
  std::vector<std::string> train_set = usable(train);
  const std::vector<std::string> valid_set = usable(valid);
  if (train_set.empty()) throw InvalidArgument("baseline: no usable training passwords");
  if (valid_set.empty()) throw InvalidArgument("baseline: no usable validation passwords");

  std::mt19937_64 rng(train_config.rng_seed);
  EarlyStopping stopper(train_config.patience);
  nn::ParamSet best = params;
  TrainResult result;
  std::size_t step = 0;
  const std::size_t batch = train_config.baseline_batch;
  std::size_t cursor = train_set.size();

  for (std::size_t epoch = 1; epoch <= train_config.max_epochs; ++epoch) {
    const std::size_t full = (train_set.size() + batch - 1) / batch;
    const std::size_t steps = train_config.baseline_steps_per_epoch == 0
                                  ? full
                                  : train_config.baseline_steps_per_epoch;
    double epoch_loss = 0.0;
    for (std::size_t s = 0; s < steps; ++s) {
      if (cursor >= train_set.size()) {
        std::shuffle(train_set.begin(), train_set.end(), rng);
        cursor = 0;
      }
      const std::size_t end = std::min(train_set.size(), cursor + batch);
      const std::span<const std::string> mb(train_set.data() + cursor,
                                            end - cursor);
      cursor = end;
      const std::vector<double> w(mb.size(), 1.0 / static_cast<double>(mb.size()));
      nn::Graph g(&params);
      const nn::Var loss =
          pwmodel::TeacherForcedLoss(g, config, vocab, mb, w, std::nullopt);
      const double value = g.value(loss)[0];
      CheckLoss(value, "baseline step " + std::to_string(step + 1));
      epoch_loss += value;
      nn::AdamUpdate(params, g.Backward(loss), train_config.adam);
      ++step;
    }
    LogRecord rec;
    rec.epoch = epoch;
    rec.step = step;
    rec.train_loss = epoch_loss / static_cast<double>(steps);
    rec.valid_loss = BaselineLoss(params, config, valid_set);
    CheckLoss(rec.valid_loss, "baseline validation of epoch " + std::to_string(epoch));
    result.log.push_back(rec);
    result.epochs_run = epoch;
    const bool stop = stopper.Update(epoch, rec.valid_loss);
    if (stopper.improved()) best = params;
    if (on_epoch) on_epoch(rec, params);
    if (stop) break;
  }
  params = std::move(best);
  result.best_epoch = stopper.best_epoch();
  result.best_valid_loss = stopper.best_loss();
  return result;
}

}  // namespace uncm::train
