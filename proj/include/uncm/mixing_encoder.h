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

#ifndef UNCM_MIXING_ENCODER_H_
#define UNCM_MIXING_ENCODER_H_

#include <random>

#include "uncm/graph.h"
#include "uncm/param_set.h"

namespace uncm::mixing {

enum class AttentionKind {
  kSoftmax,    // standard attention, weights normalised over the set
  kDpSigmoid,  // independent sigmoid weights, clipped values, Gaussian noise
};

const char* AttentionKindName(AttentionKind kind);
AttentionKind ParseAttentionKind(const std::string& name);

// Single-head, single-layer attention over a set of value vectors with a
// learned query. Dot products are not scaled by 1/sqrt(d).
//
// Parameters: `mix/query` (1 x value_dim); dense layers `mix/g_q`, `mix/g_k`,
// `mix/g_v` (value_dim -> attention_dim); optionally `mix/out`
// (attention_dim -> seed_dim), applied after aggregation (and after noise on
// the private path).
struct MixConfig {
  std::size_t value_dim = 96;
  std::size_t attention_dim = 96;
  std::size_t seed_dim = 96;
  bool output_projection = false;
  AttentionKind kind = AttentionKind::kSoftmax;
  double clip_norm = 1.0;  // s, private path only

  void Validate() const;
};

void InitMixEncoder(nn::ParamSet& params, const MixConfig& config,
                    std::mt19937_64& rng);

// Graph forms, used for training. `values` is n x value_dim and must already
// be in canonical row order for bit-exact permutation invariance.
nn::Var AttendSoftmax(nn::Graph& g, const MixConfig& config, nn::Var values);
// Pre-noise private aggregation: sum_i clip(sigmoid(d_i) g_V(v_i), s). The
// output projection is not applied; see ProjectSeed.
nn::Var AttendDpPreNoise(nn::Graph& g, const MixConfig& config, nn::Var values,
                         double clip_norm);
// Output projection when configured, identity otherwise.
nn::Var ProjectSeed(nn::Graph& g, const MixConfig& config, nn::Var pooled);

// Copy of `values` with rows sorted by their bytes; summation order then
// depends only on the set, not on the order it was given in.
nn::Tensor CanonicalRowOrder(const nn::Tensor& values);

// Attention weights of the standard path, in canonical row order.
nn::Tensor SoftmaxWeights(const nn::ParamSet& params, const MixConfig& config,
                          const nn::Tensor& values);

// Seed from a set of value vectors via softmax attention. Throws
// InvalidArgument on an empty set.
nn::Tensor AttendSoftmax(const nn::ParamSet& params, const MixConfig& config,
                         const nn::Tensor& values);

struct DpAttention {
  nn::Tensor pre_noise;  // sum of clipped weighted values
  nn::Tensor psi;        // pre_noise + N(0, (z s)^2 I), then output projection
};

// Private aggregation with clip norm `s` and noise multiplier `z`. Throws
// InvalidArgument when s <= 0, z < 0 or the set is empty.
DpAttention AttendDp(const nn::ParamSet& params, const MixConfig& config,
                     const nn::Tensor& values, double s, double z,
                     std::mt19937_64& rng);

}  // namespace uncm::mixing

#endif  // UNCM_MIXING_ENCODER_H_
