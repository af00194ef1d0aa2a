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

#include "uncm/mixing_encoder.h"

#include <algorithm>
#include <cstring>
#include <numeric>

#include "uncm/cells.h"
#include "uncm/errors.h"

namespace uncm::mixing {

using nn::Graph;
using nn::Tensor;
using nn::Var;

const char* AttentionKindName(AttentionKind kind) {
  return kind == AttentionKind::kSoftmax ? "softmax" : "dp-sigmoid";
}

AttentionKind ParseAttentionKind(const std::string& name) {
  if (name == "softmax") return AttentionKind::kSoftmax;
  if (name == "dp-sigmoid") return AttentionKind::kDpSigmoid;
  throw InvalidArgument("unknown attention kind: " + name);
}

void MixConfig::Validate() const {
  if (value_dim == 0 || attention_dim == 0 || seed_dim == 0) {
    throw InvalidArgument("mixing encoder dimensions must be positive");
  }
  if (!output_projection && attention_dim != seed_dim) {
    throw InvalidArgument(
        "attention_dim must equal seed_dim without an output projection");
  }
  if (!(clip_norm > 0)) throw InvalidArgument("clip norm must be > 0");
}

void InitMixEncoder(nn::ParamSet& params, const MixConfig& config,
                    std::mt19937_64& rng) {
  config.Validate();
  params.Add("mix/query", nn::GlorotUniform(1, config.value_dim, rng));
  nn::InitDense(params, "mix/g_q", config.value_dim, config.attention_dim, rng);
  nn::InitDense(params, "mix/g_k", config.value_dim, config.attention_dim, rng);
  nn::InitDense(params, "mix/g_v", config.value_dim, config.attention_dim, rng);
  if (config.output_projection) {
    nn::InitDense(params, "mix/out", config.attention_dim, config.seed_dim, rng);
  }
}

namespace {

// d_i = g_Q(q) . g_K(v_i), as an n x 1 column.
Var Scores(Graph& g, Var values) {
  const Var query = nn::Dense(g, "mix/g_q", g.Param("mix/query"));
  const Var keys = nn::Dense(g, "mix/g_k", values);
  return g.MatMul(keys, g.Transpose(query));
}

void CheckValues(const MixConfig& config, const Tensor& values) {
  if (values.empty() || values.rows() == 0) {
    throw InvalidArgument("attention over an empty value set");
  }
  if (values.cols() != config.value_dim) {
    throw ShapeError("attention: values have shape " + values.ShapeString() +
                     ", expected " + std::to_string(config.value_dim) +
                     " columns");
  }
}

}  // namespace

Var ProjectSeed(Graph& g, const MixConfig& config, Var pooled) {
  return config.output_projection ? nn::Dense(g, "mix/out", pooled) : pooled;
}

Var AttendSoftmax(Graph& g, const MixConfig& config, Var values) {
  CheckValues(config, g.value(values));
  const Var weights = g.Transpose(g.Softmax(g.Transpose(Scores(g, values))));
  const Var projected = nn::Dense(g, "mix/g_v", values);
  return ProjectSeed(g, config, g.MatMul(g.Transpose(weights), projected));
}

Var AttendDpPreNoise(Graph& g, const MixConfig& config, Var values,
                     double clip_norm) {
  CheckValues(config, g.value(values));
  const Var weights = g.Sigmoid(Scores(g, values));
  const Var weighted = g.Mul(nn::Dense(g, "mix/g_v", values), weights);
  return g.SumRows(g.ClipRowsByNorm(weighted, clip_norm));
}

Tensor CanonicalRowOrder(const Tensor& values) {
  std::vector<std::size_t> order(values.rows());
  std::iota(order.begin(), order.end(), 0);
  const std::size_t bytes = values.cols() * sizeof(double);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) {
                     return std::memcmp(values.row(a).data(),
                                        values.row(b).data(), bytes) < 0;
                   });
  Tensor out = Tensor::Zeros(values.rows(), values.cols());
  for (std::size_t i = 0; i < order.size(); ++i) {
    std::copy(values.row(order[i]).begin(), values.row(order[i]).end(),
              out.row(i).begin());
  }
  return out;
}

Tensor SoftmaxWeights(const nn::ParamSet& params, const MixConfig& config,
                      const Tensor& values) {
  CheckValues(config, values);
  Graph g(&params);
  const Var v = g.Input(CanonicalRowOrder(values));
  return g.value(g.Softmax(g.Transpose(Scores(g, v))));
}

Tensor AttendSoftmax(const nn::ParamSet& params, const MixConfig& config,
                     const Tensor& values) {
  CheckValues(config, values);
  Graph g(&params);
  return g.value(AttendSoftmax(g, config, g.Input(CanonicalRowOrder(values))));
}

DpAttention AttendDp(const nn::ParamSet& params, const MixConfig& config,
                     const Tensor& values, double s, double z,
                     std::mt19937_64& rng) {
  if (!(s > 0)) throw InvalidArgument("attend_dp: clip norm s must be > 0");
  if (!(z >= 0)) throw InvalidArgument("attend_dp: noise multiplier z must be >= 0");
  CheckValues(config, values);
  Graph g(&params);
  const Var pre =
      AttendDpPreNoise(g, config, g.Input(CanonicalRowOrder(values)), s);
  DpAttention out;
  out.pre_noise = g.value(pre);
  Tensor noisy = out.pre_noise;
  if (z > 0) {
    std::normal_distribution<double> noise(0.0, z * s);
    for (double& x : noisy.data()) x += noise(rng);
  }
  out.psi = g.value(ProjectSeed(g, config, g.Input(std::move(noisy))));
  return out;
}

}  // namespace uncm::mixing
