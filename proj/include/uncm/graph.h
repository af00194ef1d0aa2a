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

#ifndef UNCM_GRAPH_H_
#define UNCM_GRAPH_H_

#include <functional>
#include <map>
#include <string>
#include <unordered_map>
#include <vector>

#include "uncm/param_set.h"
#include "uncm/tensor.h"

namespace uncm::nn {

// Handle to a node of a Graph.
struct Var {
  int id = -1;
};

// Reverse-mode differentiation tape. Nodes are recorded eagerly: every op
// computes its value immediately and remembers how to push gradients back.
//
// All ops work on rank-2 arrays. Broadcasting is limited to what the models
// need: a 1 x c row against an n x c matrix (Add, Mul), and an n x 1 column
// against an n x c matrix (Mul).
//
// A Graph is single-use and not thread-safe; build one per thread. The bound
// ParamSet is only read.
class Graph {
 public:
  explicit Graph(const ParamSet* params = nullptr) : params_(params) {}

  Graph(const Graph&) = delete;
  Graph& operator=(const Graph&) = delete;

  // Constant leaf; receives no gradient.
  Var Input(Tensor value);
  // Leaf bound to the named parameter. Repeated calls return the same node.
  Var Param(const std::string& name);

  Var MatMul(Var a, Var b);
  Var Add(Var a, Var b);
  Var Sub(Var a, Var b);
  Var Mul(Var a, Var b);
  // scale * a + shift, elementwise.
  Var Affine(Var a, double scale, double shift = 0.0);
  Var Concat(const std::vector<Var>& parts);  // along columns
  Var SliceCols(Var a, std::size_t begin, std::size_t end);
  // Row gather: result row i is a[ids[i]]. Serves embedding lookups.
  Var GatherRows(Var a, std::vector<int> ids);
  Var Transpose(Var a);
  Var RepeatRows(Var a, std::size_t n);

  Var Sigmoid(Var a);
  Var Tanh(Var a);
  Var Relu(Var a);
  // Row-wise softmax.
  Var Softmax(Var a);
  // Row-wise L2 clipping: r / max(1, ||r|| / s).
  Var ClipRowsByNorm(Var a, double s);

  Var Sum(Var a);      // -> 1 x 1
  Var Mean(Var a);     // -> 1 x 1
  Var SumRows(Var a);  // column sums, -> 1 x c

  // sum_i weights[i] * -log softmax(logits_i)[targets[i]]; rows whose weight
  // is zero contribute nothing. -> 1 x 1
  Var SoftmaxCrossEntropy(Var logits, std::vector<int> targets,
                          std::vector<double> weights);

  // Batch normalisation over rows with batch statistics (training mode).
  Var BatchNorm(Var a, Var gamma, Var beta, double eps = 1e-5);

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  // Gradient accumulated by the last Backward(); empty when unreached.
  const Tensor& grad(Var v) const { return nodes_.at(v.id).grad; }
  std::size_t num_nodes() const { return nodes_.size(); }

  // Back-propagates from a 1 x 1 loss. Returns a gradient for every parameter
  // of the bound ParamSet; parameters the loss does not reach get zeros.
  GradMap Backward(Var loss);

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    std::function<void(Graph&)> backward;
  };

  Var Push(Tensor value, bool requires_grad,
           std::function<void(Graph&)> backward = nullptr);
  Node& node(Var v) { return nodes_.at(v.id); }
  const Node& node(Var v) const { return nodes_.at(v.id); }
  // Gradient buffer of v, allocated on first use.
  Tensor& GradRef(Var v);
  bool Needs(Var v) const { return node(v).requires_grad; }

  const ParamSet* params_;
  std::vector<Node> nodes_;
  std::unordered_map<std::string, int> param_nodes_;
};

// Named inputs and outputs of a computation.
using NamedTensors = std::map<std::string, Tensor>;
using NamedVars = std::map<std::string, Var>;
using Computation = std::function<NamedVars(Graph&, const NamedVars& inputs)>;

struct Evaluation {
  NamedTensors outputs;
  GradMap grads;
};

// Runs `computation` on a fresh tape and differentiates the output named
// `loss_name`, which must be a scalar.
Evaluation EvalWithGradients(const Computation& computation,
                             const ParamSet& params, const NamedTensors& inputs,
                             const std::string& loss_name = "loss");

}  // namespace uncm::nn

#endif  // UNCM_GRAPH_H_
