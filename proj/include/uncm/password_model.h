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

#ifndef UNCM_PASSWORD_MODEL_H_
#define UNCM_PASSWORD_MODEL_H_

#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "uncm/graph.h"
#include "uncm/param_set.h"
#include "uncm/password_distribution.h"

namespace uncm::pwmodel {

// Character alphabet of the password model. Input ids: 0 is START, 1..A the
// characters. Output ids: 0 is END, 1..A the characters. START is never an
// output and END never an input, so neither can appear mid-string.
class CharVocab {
 public:
  static constexpr int kStart = 0;
  static constexpr int kEnd = 0;

  // The 95 printable ASCII characters, space through '~'.
  static CharVocab PrintableAscii();
  explicit CharVocab(std::string alphabet);

  // 1-based id of `c`, or -1 when `c` is not in the alphabet.
  int Id(char c) const;
  char CharAt(int id) const { return alphabet_[static_cast<std::size_t>(id - 1)]; }
  bool Contains(char c) const { return Id(c) > 0; }
  std::size_t alphabet_size() const { return alphabet_.size(); }
  std::size_t num_classes() const { return alphabet_.size() + 1; }
  const std::string& alphabet() const { return alphabet_; }

 private:
  std::string alphabet_;
  std::vector<int> ids_;  // indexed by unsigned char
};

struct PasswordModelConfig {
  std::string alphabet;  // empty means printable ASCII
  std::size_t max_len = 30;
  std::size_t embedding = 32;
  std::size_t hidden = 128;
  std::size_t layers = 3;
  std::size_t seed_dim = 96;
  // Conditional models carry the seed projections g_h^i and g_C^i.
  bool conditional = true;

  CharVocab vocab() const;
};

// Parameters under `pm/`: `pm/emb`, `pm/lstm<i>/{w,u,b}`, `pm/out/{w,b}` and,
// for conditional models, dense layers `pm/seed_h<i>` and `pm/seed_c<i>`
// mapping seed_dim -> hidden.
void InitPasswordModel(nn::ParamSet& params, const PasswordModelConfig& config,
                       std::mt19937_64& rng);

// Number of password-model scalars excluding the seed projections.
std::size_t CoreParameterCount(const nn::ParamSet& params);

// Initial (h, c) per layer on the tape. With a seed (1 x seed_dim) the states
// are g_h^i(psi), g_C^i(psi); without one they are zeros.
std::vector<std::pair<nn::Var, nn::Var>> InitialStates(
    nn::Graph& g, const PasswordModelConfig& config, std::optional<nn::Var> psi,
    std::size_t batch);

// Teacher-forced negative log-likelihood: sum_i weights[i] * -log P(x_i),
// END transition included. Every password must be in the key space.
nn::Var TeacherForcedLoss(nn::Graph& g, const PasswordModelConfig& config,
                          const CharVocab& vocab,
                          std::span<const std::string> passwords,
                          std::span<const double> weights,
                          std::optional<nn::Var> psi);

// Frozen copy of the password-model weights for fast batched inference.
class InferenceNet {
 public:
  using Matrix =
      Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  InferenceNet(const nn::ParamSet& params, PasswordModelConfig config);

  const PasswordModelConfig& config() const { return config_; }
  const CharVocab& vocab() const { return vocab_; }

  struct State {
    std::vector<Matrix> h;  // per layer, n x hidden
    std::vector<Matrix> c;
  };

  // Feeds one input token per row and returns log-probabilities over output
  // classes (n x num_classes).
  Matrix Step(const std::vector<int>& inputs, State& state) const;

 private:
  PasswordModelConfig config_;
  CharVocab vocab_;
  Matrix embedding_;
  std::vector<Matrix> w_, u_;
  std::vector<Eigen::RowVectorXd> b_;
  Matrix out_w_;
  Eigen::RowVectorXd out_b_;
};

// Per-layer initial states of a seeded model, each 1 x hidden.
struct InitialState {
  std::vector<nn::Tensor> h;
  std::vector<nn::Tensor> c;

  bool AllZero() const;
};

// f_Theta initialised with states derived from a seed (or zeros for the
// baseline). Immutable and safe to share across threads.
class SeededModel : public PasswordDistribution {
 public:
  SeededModel(std::shared_ptr<const InferenceNet> net, InitialState states,
              std::string seed_id);

  const std::string& seed_id() const { return seed_id_; }
  // True when every initial state is exactly zero.
  bool IsBaseline() const { return baseline_; }
  const InitialState& states() const { return states_; }
  const InferenceNet& net() const { return *net_; }
  std::shared_ptr<const InferenceNet> shared_net() const { return net_; }
  std::size_t max_len() const { return net_->config().max_len; }

  bool InKeySpace(std::string_view password) const override;
  double LogProb(std::string_view password) const override;
  std::vector<double> LogProbs(
      std::span<const std::string> passwords) const override;
  std::vector<SampledPassword> Sample(std::mt19937_64& rng,
                                      std::size_t n) const override;

  // State broadcast to `n` rows.
  InferenceNet::State Broadcast(std::size_t n) const;
  // Log-distribution of the next output given inputs consumed so far; at
  // position max_len the END class gets probability 1.
  InferenceNet::Matrix StepLogProbs(const std::vector<int>& inputs,
                                    InferenceNet::State& state,
                                    std::size_t position) const;

 private:
  std::shared_ptr<const InferenceNet> net_;
  InitialState states_;
  std::string seed_id_;
  bool baseline_;
};

// Computes g_h^i(psi), g_C^i(psi) for every layer. psi is 1 x seed_dim.
InitialState ProjectSeedStates(const nn::ParamSet& params,
                               const PasswordModelConfig& config,
                               const nn::Tensor& psi);

SeededModel MakeSeededModel(const nn::ParamSet& params,
                            const PasswordModelConfig& config,
                            const nn::Tensor& psi, std::string seed_id);
SeededModel MakeBaselineModel(const nn::ParamSet& params,
                              const PasswordModelConfig& config);

struct RankedPassword {
  std::string password;
  double log_prob = 0.0;
  double probability = 0.0;
};

// Upper bound on strings enumerate_exact will visit.
inline constexpr std::size_t kMaxEnumeration = 1'000'000;

// Every string over `alphabet` (a subset of the model alphabet) of length at
// most `max_len`, with its exact probability, sorted by descending
// probability and lexicographically among ties. Throws InvalidArgument when
// the space exceeds kMaxEnumeration.
std::vector<RankedPassword> EnumerateExact(const SeededModel& model,
                                           std::string_view alphabet,
                                           std::size_t max_len);

// Argmax decode, one character at a time.
std::string GreedyDecode(const SeededModel& model);

}  // namespace uncm::pwmodel

#endif  // UNCM_PASSWORD_MODEL_H_
