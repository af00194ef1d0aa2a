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

#include "uncm/graph.h"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <utility>

#include "uncm/errors.h"

namespace uncm::nn {

namespace {

using RowMajor =
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using MapMat = Eigen::Map<RowMajor>;
using ConstMapMat = Eigen::Map<const RowMajor>;

MapMat AsMat(Tensor& t) {
  return MapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                static_cast<Eigen::Index>(t.cols()));
}

ConstMapMat AsMat(const Tensor& t) {
  return ConstMapMat(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                     static_cast<Eigen::Index>(t.cols()));
}

[[noreturn]] void Mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " +
                   a.ShapeString() + " and " + b.ShapeString());
}

enum class Broadcast { kNone, kRow, kColumn };

Broadcast BroadcastKind(const char* op, const Tensor& a, const Tensor& b,
                        bool allow_column) {
  if (a.rows() == b.rows() && a.cols() == b.cols()) return Broadcast::kNone;
  if (b.rows() == 1 && b.cols() == a.cols()) return Broadcast::kRow;
  if (allow_column && b.cols() == 1 && b.rows() == a.rows()) {
    return Broadcast::kColumn;
  }
  Mismatch(op, a, b);
}

double SigmoidScalar(double x) {
  if (x >= 0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

Var Graph::Push(Tensor value, bool requires_grad,
                std::function<void(Graph&)> backward) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.backward = std::move(backward);
  nodes_.push_back(std::move(n));
  return Var{static_cast<int>(nodes_.size()) - 1};
}

Tensor& Graph::GradRef(Var v) {
  Node& n = node(v);
  if (n.grad.empty()) n.grad = Tensor(n.value.shape());
  return n.grad;
}

Var Graph::Input(Tensor value) { return Push(std::move(value), false); }

Var Graph::Param(const std::string& name) {
  auto it = param_nodes_.find(name);
  if (it != param_nodes_.end()) return Var{it->second};
  if (params_ == nullptr) {
    throw InvalidArgument("graph has no parameter set; cannot bind " + name);
  }
  Var v = Push(params_->Get(name), true, nullptr);
  param_nodes_.emplace(name, v.id);
  return v;
}

Var Graph::MatMul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (av.cols() != bv.rows()) Mismatch("matmul", av, bv);
  Tensor out = Tensor::Zeros(av.rows(), bv.cols());
  AsMat(out).noalias() = AsMat(av) * AsMat(bv);
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a) || Needs(b), [a, b, self](Graph& g) {
    const Tensor& go = g.grad(self);
    if (g.Needs(a)) {
      AsMat(g.GradRef(a)).noalias() += AsMat(go) * AsMat(g.value(b)).transpose();
    }
    if (g.Needs(b)) {
      AsMat(g.GradRef(b)).noalias() += AsMat(g.value(a)).transpose() * AsMat(go);
    }
  });
}

Var Graph::Add(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  const Broadcast kind = BroadcastKind("add", av, bv, false);
  Tensor out = av;
  if (kind == Broadcast::kNone) {
    AsMat(out) += AsMat(bv);
  } else {
    AsMat(out).rowwise() += AsMat(bv).row(0);
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a) || Needs(b),
              [a, b, self, kind](Graph& g) {
                const Tensor& go = g.grad(self);
                if (g.Needs(a)) AsMat(g.GradRef(a)) += AsMat(go);
                if (g.Needs(b)) {
                  if (kind == Broadcast::kNone) {
                    AsMat(g.GradRef(b)) += AsMat(go);
                  } else {
                    AsMat(g.GradRef(b)).row(0) += AsMat(go).colwise().sum();
                  }
                }
              });
}

Var Graph::Sub(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  if (!av.SameShape(bv)) Mismatch("sub", av, bv);
  Tensor out = av;
  AsMat(out) -= AsMat(bv);
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a) || Needs(b), [a, b, self](Graph& g) {
    const Tensor& go = g.grad(self);
    if (g.Needs(a)) AsMat(g.GradRef(a)) += AsMat(go);
    if (g.Needs(b)) AsMat(g.GradRef(b)) -= AsMat(go);
  });
}

Var Graph::Mul(Var a, Var b) {
  const Tensor& av = value(a);
  const Tensor& bv = value(b);
  const Broadcast kind = BroadcastKind("mul", av, bv, true);
  Tensor out = av;
  switch (kind) {
    case Broadcast::kNone:
      AsMat(out).array() *= AsMat(bv).array();
      break;
    case Broadcast::kRow:
      AsMat(out).array().rowwise() *= AsMat(bv).row(0).array();
      break;
    case Broadcast::kColumn:
      AsMat(out).array().colwise() *= AsMat(bv).col(0).array();
      break;
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a) || Needs(b), [a, b, self,
                                                     kind](Graph& g) {
    const Tensor& go = g.grad(self);
    const ConstMapMat gm = AsMat(go);
    const ConstMapMat am = AsMat(g.value(a));
    const ConstMapMat bm = AsMat(g.value(b));
    switch (kind) {
      case Broadcast::kNone:
        if (g.Needs(a)) AsMat(g.GradRef(a)).array() += gm.array() * bm.array();
        if (g.Needs(b)) AsMat(g.GradRef(b)).array() += gm.array() * am.array();
        break;
      case Broadcast::kRow:
        if (g.Needs(a)) {
          AsMat(g.GradRef(a)).array() +=
              gm.array().rowwise() * bm.row(0).array();
        }
        if (g.Needs(b)) {
          AsMat(g.GradRef(b)).row(0).array() +=
              (gm.array() * am.array()).colwise().sum();
        }
        break;
      case Broadcast::kColumn:
        if (g.Needs(a)) {
          AsMat(g.GradRef(a)).array() +=
              gm.array().colwise() * bm.col(0).array();
        }
        if (g.Needs(b)) {
          AsMat(g.GradRef(b)).col(0).array() +=
              (gm.array() * am.array()).rowwise().sum();
        }
        break;
    }
  });
}

Var Graph::Affine(Var a, double scale, double shift) {
  Tensor out = value(a);
  for (double& x : out.data()) x = scale * x + shift;
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self, scale](Graph& g) {
    AsMat(g.GradRef(a)) += scale * AsMat(g.grad(self));
  });
}

Var Graph::Concat(const std::vector<Var>& parts) {
  if (parts.empty()) throw InvalidArgument("concat: no operands");
  const std::size_t rows = value(parts[0]).rows();
  std::size_t cols = 0;
  bool needs = false;
  for (Var p : parts) {
    if (value(p).rows() != rows) Mismatch("concat", value(parts[0]), value(p));
    cols += value(p).cols();
    needs = needs || Needs(p);
  }
  Tensor out = Tensor::Zeros(rows, cols);
  std::size_t offset = 0;
  for (Var p : parts) {
    const Tensor& pv = value(p);
    AsMat(out).middleCols(static_cast<Eigen::Index>(offset),
                          static_cast<Eigen::Index>(pv.cols())) = AsMat(pv);
    offset += pv.cols();
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), needs, [parts, self](Graph& g) {
    const ConstMapMat gm = AsMat(g.grad(self));
    std::size_t off = 0;
    for (Var p : parts) {
      const auto c = static_cast<Eigen::Index>(g.value(p).cols());
      if (g.Needs(p)) {
        AsMat(g.GradRef(p)) += gm.middleCols(static_cast<Eigen::Index>(off), c);
      }
      off += static_cast<std::size_t>(c);
    }
  });
}

Var Graph::SliceCols(Var a, std::size_t begin, std::size_t end) {
  const Tensor& av = value(a);
  if (begin >= end || end > av.cols()) {
    throw ShapeError("slice_cols: range [" + std::to_string(begin) + ", " +
                     std::to_string(end) + ") outside " + av.ShapeString());
  }
  Tensor out = Tensor::Zeros(av.rows(), end - begin);
  AsMat(out) = AsMat(av).middleCols(static_cast<Eigen::Index>(begin),
                                    static_cast<Eigen::Index>(end - begin));
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self, begin, end](Graph& g) {
    AsMat(g.GradRef(a)).middleCols(static_cast<Eigen::Index>(begin),
                                   static_cast<Eigen::Index>(end - begin)) +=
        AsMat(g.grad(self));
  });
}

Var Graph::GatherRows(Var a, std::vector<int> ids) {
  const Tensor& av = value(a);
  if (ids.empty()) throw InvalidArgument("gather_rows: empty index list");
  Tensor out = Tensor::Zeros(ids.size(), av.cols());
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (ids[i] < 0 || static_cast<std::size_t>(ids[i]) >= av.rows()) {
      throw ShapeError("gather_rows: index " + std::to_string(ids[i]) +
                       " outside " + av.ShapeString());
    }
    std::copy_n(av.row(static_cast<std::size_t>(ids[i])).begin(), av.cols(),
                out.row(i).begin());
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a),
              [a, self, ids = std::move(ids)](Graph& g) {
                Tensor& ga = g.GradRef(a);
                const Tensor& go = g.grad(self);
                for (std::size_t i = 0; i < ids.size(); ++i) {
                  auto dst = ga.row(static_cast<std::size_t>(ids[i]));
                  auto src = go.row(i);
                  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += src[j];
                }
              });
}

Var Graph::Transpose(Var a) {
  const Tensor& av = value(a);
  Tensor out = Tensor::Zeros(av.cols(), av.rows());
  AsMat(out) = AsMat(av).transpose();
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    AsMat(g.GradRef(a)) += AsMat(g.grad(self)).transpose();
  });
}

Var Graph::RepeatRows(Var a, std::size_t n) {
  const Tensor& av = value(a);
  if (av.rows() != 1) {
    throw ShapeError("repeat_rows: expects a single row, got " +
                     av.ShapeString());
  }
  if (n == 0) throw InvalidArgument("repeat_rows: n must be positive");
  Tensor out = Tensor::Zeros(n, av.cols());
  AsMat(out).rowwise() = AsMat(av).row(0);
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    AsMat(g.GradRef(a)).row(0) += AsMat(g.grad(self)).colwise().sum();
  });
}

Var Graph::Sigmoid(Var a) {
  Tensor out = value(a);
  for (double& x : out.data()) x = SigmoidScalar(x);
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    const ConstMapMat y = AsMat(g.value(self));
    AsMat(g.GradRef(a)).array() +=
        AsMat(g.grad(self)).array() * y.array() * (1.0 - y.array());
  });
}

Var Graph::Tanh(Var a) {
  Tensor out = value(a);
  for (double& x : out.data()) x = std::tanh(x);
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    const ConstMapMat y = AsMat(g.value(self));
    AsMat(g.GradRef(a)).array() +=
        AsMat(g.grad(self)).array() * (1.0 - y.array().square());
  });
}

Var Graph::Relu(Var a) {
  Tensor out = value(a);
  for (double& x : out.data()) x = x > 0 ? x : 0.0;
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    const ConstMapMat x = AsMat(g.value(a));
    AsMat(g.GradRef(a)).array() +=
        (x.array() > 0.0).select(AsMat(g.grad(self)).array(), 0.0);
  });
}

Var Graph::Softmax(Var a) {
  Tensor out = value(a);
  for (std::size_t r = 0; r < out.rows(); ++r) {
    auto row = out.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& x : row) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : row) x /= sum;
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    const ConstMapMat y = AsMat(g.value(self));
    const ConstMapMat gy = AsMat(g.grad(self));
    const Eigen::VectorXd dots = (y.array() * gy.array()).rowwise().sum();
    AsMat(g.GradRef(a)).array() +=
        y.array() * (gy.array().colwise() - dots.array());
  });
}

Var Graph::ClipRowsByNorm(Var a, double s) {
  if (!(s > 0)) throw InvalidArgument("clip_rows_by_norm: s must be > 0");
  const Tensor& av = value(a);
  Tensor out = av;
  std::vector<double> norms(av.rows());
  for (std::size_t r = 0; r < av.rows(); ++r) {
    norms[r] = L2Norm(av.row(r));
    const double divisor = std::max(1.0, norms[r] / s);
    for (double& x : out.row(r)) x /= divisor;
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a),
              [a, self, s, norms = std::move(norms)](Graph& g) {
                const Tensor& x = g.value(a);
                const Tensor& go = g.grad(self);
                Tensor& ga = g.GradRef(a);
                for (std::size_t r = 0; r < x.rows(); ++r) {
                  auto gx = ga.row(r);
                  auto gr = go.row(r);
                  if (norms[r] <= s) {
                    for (std::size_t j = 0; j < gx.size(); ++j) gx[j] += gr[j];
                    continue;
                  }
                  // y = s * x / |x|  =>  dy = s/|x| (g - (x.g) x / |x|^2)
                  auto xr = x.row(r);
                  double dot = 0.0;
                  for (std::size_t j = 0; j < xr.size(); ++j) {
                    dot += xr[j] * gr[j];
                  }
                  const double n = norms[r];
                  for (std::size_t j = 0; j < gx.size(); ++j) {
                    gx[j] += s / n * (gr[j] - dot * xr[j] / (n * n));
                  }
                }
              });
}

Var Graph::Sum(Var a) {
  const double total = AsMat(value(a)).sum();
  const Var self{static_cast<int>(nodes_.size())};
  return Push(Tensor::Scalar(total), Needs(a), [a, self](Graph& g) {
    AsMat(g.GradRef(a)).array() += g.grad(self)[0];
  });
}

Var Graph::Mean(Var a) {
  const auto n = static_cast<double>(value(a).size());
  const double total = AsMat(value(a)).sum() / n;
  const Var self{static_cast<int>(nodes_.size())};
  return Push(Tensor::Scalar(total), Needs(a), [a, self, n](Graph& g) {
    AsMat(g.GradRef(a)).array() += g.grad(self)[0] / n;
  });
}

Var Graph::SumRows(Var a) {
  const Tensor& av = value(a);
  Tensor out = Tensor::Zeros(1, av.cols());
  AsMat(out).row(0) = AsMat(av).colwise().sum();
  const Var self{static_cast<int>(nodes_.size())};
  return Push(std::move(out), Needs(a), [a, self](Graph& g) {
    AsMat(g.GradRef(a)).rowwise() += AsMat(g.grad(self)).row(0);
  });
}

Var Graph::SoftmaxCrossEntropy(Var logits, std::vector<int> targets,
                               std::vector<double> weights) {
  const Tensor& lv = value(logits);
  if (targets.size() != lv.rows() || weights.size() != lv.rows()) {
    throw ShapeError("softmax_cross_entropy: " + std::to_string(targets.size()) +
                     " targets and " + std::to_string(weights.size()) +
                     " weights for logits " + lv.ShapeString());
  }
  Tensor probs = lv;
  double loss = 0.0;
  for (std::size_t r = 0; r < lv.rows(); ++r) {
    auto row = probs.row(r);
    const double mx = *std::max_element(row.begin(), row.end());
    double sum = 0.0;
    for (double& x : row) {
      x = std::exp(x - mx);
      sum += x;
    }
    for (double& x : row) x /= sum;
    if (weights[r] == 0.0) continue;
    const int t = targets[r];
    if (t < 0 || static_cast<std::size_t>(t) >= lv.cols()) {
      throw ShapeError("softmax_cross_entropy: target " + std::to_string(t) +
                       " outside " + std::to_string(lv.cols()) + " classes");
    }
    const double log_p = lv.at(r, t) - mx - std::log(sum);
    loss -= weights[r] * log_p;
  }
  const Var self{static_cast<int>(nodes_.size())};
  return Push(Tensor::Scalar(loss), Needs(logits),
              [logits, self, probs = std::move(probs),
               targets = std::move(targets),
               weights = std::move(weights)](Graph& g) {
                const double go = g.grad(self)[0];
                Tensor& gl = g.GradRef(logits);
                for (std::size_t r = 0; r < probs.rows(); ++r) {
                  if (weights[r] == 0.0) continue;
                  const double w = go * weights[r];
                  auto dst = gl.row(r);
                  auto p = probs.row(r);
                  for (std::size_t j = 0; j < dst.size(); ++j) dst[j] += w * p[j];
                  dst[static_cast<std::size_t>(targets[r])] -= w;
                }
              });
}

Var Graph::BatchNorm(Var a, Var gamma, Var beta, double eps) {
  const Tensor& x = value(a);
  const Tensor& gm = value(gamma);
  const Tensor& bt = value(beta);
  if (gm.rows() != 1 || gm.cols() != x.cols()) Mismatch("batch_norm", x, gm);
  if (!gm.SameShape(bt)) Mismatch("batch_norm", gm, bt);
  const auto n = static_cast<double>(x.rows());
  const Eigen::RowVectorXd mean = AsMat(x).colwise().mean();
  const RowMajor centered = AsMat(x).rowwise() - mean;
  const Eigen::RowVectorXd var = centered.array().square().colwise().sum() / n;
  const Eigen::RowVectorXd inv_std = (var.array() + eps).rsqrt();
  Tensor xhat = Tensor::Zeros(x.rows(), x.cols());
  AsMat(xhat) = centered.array().rowwise() * inv_std.array();
  Tensor out = Tensor::Zeros(x.rows(), x.cols());
  AsMat(out) = (AsMat(xhat).array().rowwise() * AsMat(gm).row(0).array())
                   .rowwise() +
               AsMat(bt).row(0).array();
  const Var self{static_cast<int>(nodes_.size())};
  const bool needs = Needs(a) || Needs(gamma) || Needs(beta);
  return Push(std::move(out), needs,
              [a, gamma, beta, self, n, xhat = std::move(xhat),
               inv_std](Graph& g) {
                const ConstMapMat go = AsMat(g.grad(self));
                const ConstMapMat xh = AsMat(xhat);
                const Eigen::RowVectorXd dbeta = go.colwise().sum();
                const Eigen::RowVectorXd dgamma =
                    (go.array() * xh.array()).colwise().sum();
                if (g.Needs(beta)) AsMat(g.GradRef(beta)).row(0) += dbeta;
                if (g.Needs(gamma)) AsMat(g.GradRef(gamma)).row(0) += dgamma;
                if (g.Needs(a)) {
                  const Eigen::RowVectorXd gm_row =
                      AsMat(g.value(gamma)).row(0);
                  // dx = gamma/std/n * (n*go - sum(go) - xhat*sum(go*xhat))
                  RowMajor dx = (go.array() * n).matrix();
                  dx.rowwise() -= dbeta;
                  dx.array() -= xh.array().rowwise() * dgamma.array();
                  dx.array().rowwise() *=
                      (gm_row.array() * inv_std.array() / n);
                  AsMat(g.GradRef(a)) += dx;
                }
              });
}

GradMap Graph::Backward(Var loss) {
  const Tensor& lv = value(loss);
  if (lv.size() != 1) {
    throw ShapeError("backward: loss must be a scalar, got " + lv.ShapeString());
  }
  for (Node& n : nodes_) n.grad = Tensor();
  GradRef(loss)[0] = 1.0;
  for (int i = loss.id; i >= 0; --i) {
    Node& n = nodes_[static_cast<std::size_t>(i)];
    if (!n.requires_grad || n.grad.empty() || !n.backward) continue;
    n.backward(*this);
  }
  GradMap grads;
  if (params_ == nullptr) return grads;
  for (const auto& [name, e] : params_->entries()) {
    auto it = param_nodes_.find(name);
    if (it != param_nodes_.end() && !nodes_[it->second].grad.empty()) {
      grads[name] = nodes_[it->second].grad;
    } else {
      grads[name] = Tensor(e.value.shape());
    }
  }
  return grads;
}

Evaluation EvalWithGradients(const Computation& computation,
                             const ParamSet& params, const NamedTensors& inputs,
                             const std::string& loss_name) {
  Graph graph(&params);
  NamedVars in;
  for (const auto& [name, t] : inputs) in[name] = graph.Input(t);
  NamedVars out = computation(graph, in);
  auto it = out.find(loss_name);
  if (it == out.end()) {
    throw InvalidArgument("computation has no output named " + loss_name);
  }
  Evaluation result;
  for (const auto& [name, v] : out) result.outputs[name] = graph.value(v);
  result.grads = graph.Backward(it->second);
  return result;
}

}  // namespace uncm::nn
