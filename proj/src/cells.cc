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

#include "uncm/cells.h"

#include "uncm/errors.h"

namespace uncm::nn {

namespace {

void CheckCols(const Graph& g, Var v, std::size_t want, const char* op,
               const char* what) {
  if (g.value(v).cols() != want) {
    throw ShapeError(std::string(op) + ": " + what + " has shape " +
                     g.value(v).ShapeString() + ", expected " +
                     std::to_string(want) + " columns");
  }
}

}  // namespace

void InitDense(ParamSet& params, const std::string& prefix, std::size_t in,
               std::size_t out, std::mt19937_64& rng) {
  params.Add(prefix + "/w", GlorotUniform(in, out, rng));
  params.Add(prefix + "/b", Tensor::Zeros(1, out));
}

Var Dense(Graph& g, const std::string& prefix, Var x) {
  return g.Add(g.MatMul(x, g.Param(prefix + "/w")), g.Param(prefix + "/b"));
}

void InitGru(ParamSet& params, const std::string& prefix, std::size_t in,
             std::size_t hidden, std::mt19937_64& rng) {
  params.Add(prefix + "/w_x", GlorotUniform(in, 3 * hidden, rng));
  params.Add(prefix + "/u_zr", GlorotUniform(hidden, 2 * hidden, rng));
  params.Add(prefix + "/u_h", GlorotUniform(hidden, hidden, rng));
  params.Add(prefix + "/b", Tensor::Zeros(1, 3 * hidden));
}

Var GruStep(Graph& g, const std::string& prefix, Var x, Var h_prev) {
  const Var w_x = g.Param(prefix + "/w_x");
  const Var u_zr = g.Param(prefix + "/u_zr");
  const Var u_h = g.Param(prefix + "/u_h");
  const Var b = g.Param(prefix + "/b");
  const std::size_t hidden = g.value(u_h).rows();
  CheckCols(g, x, g.value(w_x).rows(), "gru_step", "input");
  CheckCols(g, h_prev, hidden, "gru_step", "previous state");
  if (g.value(x).rows() != g.value(h_prev).rows()) {
    throw ShapeError("gru_step: batch of input " + g.value(x).ShapeString() +
                     " differs from state " + g.value(h_prev).ShapeString());
  }

  const Var xw = g.Add(g.MatMul(x, w_x), b);
  const Var hu = g.MatMul(h_prev, u_zr);
  const Var z = g.Sigmoid(
      g.Add(g.SliceCols(xw, 0, hidden), g.SliceCols(hu, 0, hidden)));
  const Var r = g.Sigmoid(g.Add(g.SliceCols(xw, hidden, 2 * hidden),
                                g.SliceCols(hu, hidden, 2 * hidden)));
  const Var candidate = g.Tanh(g.Add(g.SliceCols(xw, 2 * hidden, 3 * hidden),
                                     g.MatMul(g.Mul(r, h_prev), u_h)));
  // h' = h + z * (h~ - h)
  return g.Add(h_prev, g.Mul(z, g.Sub(candidate, h_prev)));
}

void InitLstm(ParamSet& params, const std::string& prefix, std::size_t in,
              std::size_t hidden, std::mt19937_64& rng) {
  params.Add(prefix + "/w", GlorotUniform(in, 4 * hidden, rng));
  params.Add(prefix + "/u", GlorotUniform(hidden, 4 * hidden, rng));
  Tensor bias = Tensor::Zeros(1, 4 * hidden);
  for (std::size_t j = hidden; j < 2 * hidden; ++j) bias[j] = 1.0;
  params.Add(prefix + "/b", std::move(bias));
}

LstmState LstmStep(Graph& g, const std::string& prefix, Var x,
                   const LstmState& prev) {
  const Var w = g.Param(prefix + "/w");
  const Var u = g.Param(prefix + "/u");
  const Var b = g.Param(prefix + "/b");
  const std::size_t hidden = g.value(u).rows();
  CheckCols(g, x, g.value(w).rows(), "lstm_step", "input");
  CheckCols(g, prev.h, hidden, "lstm_step", "previous hidden state");
  CheckCols(g, prev.c, hidden, "lstm_step", "previous cell state");

  const Var gates = g.Add(g.Add(g.MatMul(x, w), g.MatMul(prev.h, u)), b);
  const Var i = g.Sigmoid(g.SliceCols(gates, 0, hidden));
  const Var f = g.Sigmoid(g.SliceCols(gates, hidden, 2 * hidden));
  const Var cand = g.Tanh(g.SliceCols(gates, 2 * hidden, 3 * hidden));
  const Var o = g.Sigmoid(g.SliceCols(gates, 3 * hidden, 4 * hidden));
  const Var c = g.Add(g.Mul(f, prev.c), g.Mul(i, cand));
  const Var h = g.Mul(o, g.Tanh(c));
  return {h, c};
}

}  // namespace uncm::nn
