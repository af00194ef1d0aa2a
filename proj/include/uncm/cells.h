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

#ifndef UNCM_CELLS_H_
#define UNCM_CELLS_H_

#include <random>
#include <string>

#include "uncm/graph.h"
#include "uncm/param_set.h"

namespace uncm::nn {

// Dense layer `<prefix>/w` (in x out) and `<prefix>/b` (1 x out).
void InitDense(ParamSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, std::mt19937_64& rng);
Var Dense(Graph& g, const std::string& prefix, Var x);

// GRU cell (Cho et al. formulation):
//   z  = sigmoid(x Wz + h Uz + bz)
//   r  = sigmoid(x Wr + h Ur + br)
//   h~ = tanh(x Wh + (r * h) Uh + bh)
//   h' = (1 - z) * h + z * h~
// Parameters: `<prefix>/w_x` (in x 3H, gate order z|r|h), `<prefix>/u_zr`
// (H x 2H), `<prefix>/u_h` (H x H), `<prefix>/b` (1 x 3H).
void InitGru(ParamSet& params, const std::string& prefix, std::size_t in,
             std::size_t hidden, std::mt19937_64& rng);
Var GruStep(Graph& g, const std::string& prefix, Var x, Var h_prev);

// LSTM cell with input, forget and output gates:
//   [i f g o] = x W + h U + b
//   c' = sigmoid(f) * c + sigmoid(i) * tanh(g)
//   h' = sigmoid(o) * tanh(c')
// Parameters: `<prefix>/w` (in x 4H), `<prefix>/u` (H x 4H), `<prefix>/b`
// (1 x 4H). The forget-gate bias starts at 1.
void InitLstm(ParamSet& params, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::mt19937_64& rng);

struct LstmState {
  Var h;
  Var c;
};
LstmState LstmStep(Graph& g, const std::string& prefix, Var x,
                   const LstmState& prev);

}  // namespace uncm::nn

#endif  // UNCM_CELLS_H_
