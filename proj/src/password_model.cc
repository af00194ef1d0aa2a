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

#include "uncm/password_model.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uncm/cells.h"
#include "uncm/errors.h"

namespace uncm::pwmodel {

using nn::Graph;
using nn::Tensor;
using nn::Var;
using Matrix = InferenceNet::Matrix;

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::string LayerPrefix(std::size_t i) { return "pm/lstm" + std::to_string(i); }
std::string SeedH(std::size_t i) { return "pm/seed_h" + std::to_string(i); }
std::string SeedC(std::size_t i) { return "pm/seed_c" + std::to_string(i); }

Matrix ToMatrix(const Tensor& t) {
  Matrix m(static_cast<Eigen::Index>(t.rows()),
           static_cast<Eigen::Index>(t.cols()));
  std::copy(t.data().begin(), t.data().end(), m.data());
  return m;
}

void LogSoftmaxRows(Matrix& m) {
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    const double mx = m.row(r).maxCoeff();
    const double lse = mx + std::log((m.row(r).array() - mx).exp().sum());
    m.row(r).array() -= lse;
  }
}

double Sigmoid(double x) {
  return x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
}

}  // namespace

CharVocab CharVocab::PrintableAscii() {
  std::string alphabet;
  for (char c = ' '; c <= '~'; ++c) alphabet.push_back(c);
  return CharVocab(alphabet);
}

CharVocab::CharVocab(std::string alphabet)
    : alphabet_(std::move(alphabet)), ids_(256, -1) {
  if (alphabet_.empty()) throw InvalidArgument("empty password alphabet");
  for (std::size_t i = 0; i < alphabet_.size(); ++i) {
    int& slot = ids_[static_cast<unsigned char>(alphabet_[i])];
    if (slot != -1) throw InvalidArgument("duplicate character in alphabet");
    slot = static_cast<int>(i) + 1;
  }
}

int CharVocab::Id(char c) const { return ids_[static_cast<unsigned char>(c)]; }

CharVocab PasswordModelConfig::vocab() const {
  return alphabet.empty() ? CharVocab::PrintableAscii() : CharVocab(alphabet);
}

void InitPasswordModel(nn::ParamSet& params, const PasswordModelConfig& config,
                       std::mt19937_64& rng) {
  if (config.layers == 0 || config.hidden == 0 || config.embedding == 0) {
    throw InvalidArgument("password model dimensions must be positive");
  }
  const CharVocab vocab = config.vocab();
  params.Add("pm/emb",
             nn::GlorotUniform(vocab.num_classes(), config.embedding, rng));
  for (std::size_t i = 0; i < config.layers; ++i) {
    nn::InitLstm(params, LayerPrefix(i),
                 i == 0 ? config.embedding : config.hidden, config.hidden, rng);
  }
  nn::InitDense(params, "pm/out", config.hidden, vocab.num_classes(), rng);
  if (config.conditional) {
    for (std::size_t i = 0; i < config.layers; ++i) {
      nn::InitDense(params, SeedH(i), config.seed_dim, config.hidden, rng);
      nn::InitDense(params, SeedC(i), config.seed_dim, config.hidden, rng);
    }
  }
}

std::size_t CoreParameterCount(const nn::ParamSet& params) {
  return params.NumScalars("pm/emb") + params.NumScalars("pm/lstm") +
         params.NumScalars("pm/out");
}

std::vector<std::pair<Var, Var>> InitialStates(Graph& g,
                                               const PasswordModelConfig& config,
                                               std::optional<Var> psi,
                                               std::size_t batch) {
  std::vector<std::pair<Var, Var>> states;
  for (std::size_t i = 0; i < config.layers; ++i) {
    if (psi) {
      if (g.value(*psi).cols() != config.seed_dim) {
        throw ShapeError("project_seed: seed has shape " +
                         g.value(*psi).ShapeString() + ", expected " +
                         std::to_string(config.seed_dim) + " columns");
      }
      const Var h = nn::Dense(g, SeedH(i), *psi);
      const Var c = nn::Dense(g, SeedC(i), *psi);
      states.emplace_back(g.RepeatRows(h, batch), g.RepeatRows(c, batch));
    } else {
      states.emplace_back(g.Input(Tensor::Zeros(batch, config.hidden)),
                          g.Input(Tensor::Zeros(batch, config.hidden)));
    }
  }
  return states;
}

Var TeacherForcedLoss(Graph& g, const PasswordModelConfig& config,
                      const CharVocab& vocab,
                      std::span<const std::string> passwords,
                      std::span<const double> weights, std::optional<Var> psi) {
  if (passwords.empty()) throw InvalidArgument("teacher forcing: no passwords");
  if (weights.size() != passwords.size()) {
    throw ShapeError("teacher forcing: weights and passwords differ in size");
  }
  const std::size_t n = passwords.size();
  std::size_t longest = 0;
  for (const auto& p : passwords) {
    if (p.size() > config.max_len) {
      throw UnsupportedPassword("password longer than max_len");
    }
    for (char c : p) {
      if (!vocab.Contains(c)) {
        throw UnsupportedPassword("password character outside the alphabet");
      }
    }
    longest = std::max(longest, p.size());
  }
  auto states = InitialStates(g, config, psi, n);
  const Var emb = g.Param("pm/emb");
  Var loss = g.Input(Tensor::Scalar(0.0));
  for (std::size_t t = 0; t <= longest; ++t) {
    std::vector<int> inputs(n, CharVocab::kStart);
    std::vector<int> targets(n, CharVocab::kEnd);
    std::vector<double> w(n, 0.0);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string& p = passwords[i];
      if (t > p.size()) continue;
      if (t > 0) inputs[i] = vocab.Id(p[t - 1]);
      targets[i] = t < p.size() ? vocab.Id(p[t]) : CharVocab::kEnd;
      // The END transition at position max_len is certain and adds nothing.
      w[i] = (t == config.max_len) ? 0.0 : weights[i];
    }
    Var x = g.GatherRows(emb, inputs);
    for (std::size_t l = 0; l < config.layers; ++l) {
      nn::LstmState s = nn::LstmStep(g, LayerPrefix(l), x,
                                     {states[l].first, states[l].second});
      states[l] = {s.h, s.c};
      x = s.h;
    }
    const Var logits = nn::Dense(g, "pm/out", x);
    loss = g.Add(loss, g.SoftmaxCrossEntropy(logits, std::move(targets),
                                             std::move(w)));
  }
  return loss;
}

InferenceNet::InferenceNet(const nn::ParamSet& params,
                           PasswordModelConfig config)
    : config_(std::move(config)), vocab_(config_.vocab()) {
  embedding_ = ToMatrix(params.Get("pm/emb"));
  for (std::size_t i = 0; i < config_.layers; ++i) {
    w_.push_back(ToMatrix(params.Get(LayerPrefix(i) + "/w")));
    u_.push_back(ToMatrix(params.Get(LayerPrefix(i) + "/u")));
    b_.push_back(ToMatrix(params.Get(LayerPrefix(i) + "/b")).row(0));
  }
  out_w_ = ToMatrix(params.Get("pm/out/w"));
  out_b_ = ToMatrix(params.Get("pm/out/b")).row(0);
  if (static_cast<std::size_t>(embedding_.rows()) != vocab_.num_classes() ||
      static_cast<std::size_t>(out_w_.cols()) != vocab_.num_classes()) {
    throw ShapeError("password model parameters do not match the alphabet");
  }
}

Matrix InferenceNet::Step(const std::vector<int>& inputs, State& state) const {
  const auto n = static_cast<Eigen::Index>(inputs.size());
  const auto hidden = static_cast<Eigen::Index>(config_.hidden);
  Matrix x(n, embedding_.cols());
  for (Eigen::Index r = 0; r < n; ++r) x.row(r) = embedding_.row(inputs[r]);
  for (std::size_t l = 0; l < config_.layers; ++l) {
    Matrix gates = x * w_[l];
    gates.noalias() += state.h[l] * u_[l];
    gates.rowwise() += b_[l];
    Matrix& c = state.c[l];
    Matrix& h = state.h[l];
    for (Eigen::Index r = 0; r < n; ++r) {
      for (Eigen::Index j = 0; j < hidden; ++j) {
        const double i_g = Sigmoid(gates(r, j));
        const double f_g = Sigmoid(gates(r, hidden + j));
        const double cand = std::tanh(gates(r, 2 * hidden + j));
        const double o_g = Sigmoid(gates(r, 3 * hidden + j));
        c(r, j) = f_g * c(r, j) + i_g * cand;
        h(r, j) = o_g * std::tanh(c(r, j));
      }
    }
    x = h;
  }
  Matrix logits = x * out_w_;
  logits.rowwise() += out_b_;
  LogSoftmaxRows(logits);
  return logits;
}

bool InitialState::AllZero() const {
  auto zero = [](const Tensor& t) {
    return std::all_of(t.data().begin(), t.data().end(),
                       [](double x) { return x == 0.0; });
  };
  return std::all_of(h.begin(), h.end(), zero) &&
         std::all_of(c.begin(), c.end(), zero);
}

SeededModel::SeededModel(std::shared_ptr<const InferenceNet> net,
                         InitialState states, std::string seed_id)
    : net_(std::move(net)),
      states_(std::move(states)),
      seed_id_(std::move(seed_id)) {
  const auto& cfg = net_->config();
  if (states_.h.size() != cfg.layers || states_.c.size() != cfg.layers) {
    throw ShapeError("seeded model needs " + std::to_string(2 * cfg.layers) +
                     " initial-state vectors");
  }
  for (std::size_t i = 0; i < cfg.layers; ++i) {
    if (states_.h[i].size() != cfg.hidden || states_.c[i].size() != cfg.hidden) {
      throw ShapeError("initial state of layer " + std::to_string(i) +
                       " does not have the hidden dimension");
    }
  }
  baseline_ = states_.AllZero();
}

InferenceNet::State SeededModel::Broadcast(std::size_t n) const {
  InferenceNet::State s;
  const auto rows = static_cast<Eigen::Index>(n);
  for (std::size_t l = 0; l < states_.h.size(); ++l) {
    const Matrix h = ToMatrix(states_.h[l]);
    const Matrix c = ToMatrix(states_.c[l]);
    s.h.push_back(h.replicate(rows, 1));
    s.c.push_back(c.replicate(rows, 1));
  }
  return s;
}

Matrix SeededModel::StepLogProbs(const std::vector<int>& inputs,
                                 InferenceNet::State& state,
                                 std::size_t position) const {
  Matrix lp = net_->Step(inputs, state);
  if (position >= max_len()) {
    lp.setConstant(kNegInf);
    lp.col(CharVocab::kEnd).setZero();
  }
  return lp;
}

bool SeededModel::InKeySpace(std::string_view password) const {
  if (password.size() > max_len()) return false;
  const CharVocab& vocab = net_->vocab();
  return std::all_of(password.begin(), password.end(),
                     [&](char c) { return vocab.Contains(c); });
}

double SeededModel::LogProb(std::string_view password) const {
  if (!InKeySpace(password)) {
    throw UnsupportedPassword(
        "password is outside the model key space (length or alphabet)");
  }
  const std::string p(password);
  return LogProbs(std::span<const std::string>(&p, 1))[0];
}

std::vector<double> SeededModel::LogProbs(
    std::span<const std::string> passwords) const {
  std::vector<double> out(passwords.size(), kNegInf);
  const CharVocab& vocab = net_->vocab();
  constexpr std::size_t kChunk = 2048;
  for (std::size_t begin = 0; begin < passwords.size(); begin += kChunk) {
    const std::size_t end = std::min(passwords.size(), begin + kChunk);
    std::vector<std::size_t> rows;
    std::size_t longest = 0;
    for (std::size_t i = begin; i < end; ++i) {
      if (!InKeySpace(passwords[i])) continue;
      rows.push_back(i);
      longest = std::max(longest, passwords[i].size());
    }
    if (rows.empty()) continue;
    InferenceNet::State state = Broadcast(rows.size());
    std::vector<double> acc(rows.size(), 0.0);
    for (std::size_t t = 0; t <= longest; ++t) {
      std::vector<int> inputs(rows.size(), CharVocab::kStart);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& p = passwords[rows[r]];
        if (t > 0 && t <= p.size()) inputs[r] = vocab.Id(p[t - 1]);
      }
      const Matrix lp = StepLogProbs(inputs, state, t);
      for (std::size_t r = 0; r < rows.size(); ++r) {
        const std::string& p = passwords[rows[r]];
        if (t > p.size()) continue;
        const int target = t < p.size() ? vocab.Id(p[t]) : CharVocab::kEnd;
        acc[r] += lp(static_cast<Eigen::Index>(r), target);
      }
    }
    for (std::size_t r = 0; r < rows.size(); ++r) out[rows[r]] = acc[r];
  }
  return out;
}

std::vector<SampledPassword> SeededModel::Sample(std::mt19937_64& rng,
                                                 std::size_t n) const {
  const CharVocab& vocab = net_->vocab();
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<SampledPassword> out;
  out.reserve(n);
  constexpr std::size_t kChunk = 4096;
  for (std::size_t begin = 0; begin < n; begin += kChunk) {
    const std::size_t m = std::min(n - begin, kChunk);
    InferenceNet::State state = Broadcast(m);
    std::vector<std::string> text(m);
    std::vector<double> acc(m, 0.0);
    std::vector<bool> done(m, false);
    std::vector<int> inputs(m, CharVocab::kStart);
    std::size_t remaining = m;
    for (std::size_t t = 0; remaining > 0; ++t) {
      const Matrix lp = StepLogProbs(inputs, state, t);
      for (std::size_t r = 0; r < m; ++r) {
        if (done[r]) continue;
        const auto row = static_cast<Eigen::Index>(r);
        int choice = CharVocab::kEnd;
        if (t < max_len()) {
          const double u = uniform(rng);
          double cum = 0.0;
          choice = -1;
          for (Eigen::Index j = 0; j < lp.cols(); ++j) {
            cum += std::exp(lp(row, j));
            if (u < cum) {
              choice = static_cast<int>(j);
              break;
            }
          }
          if (choice < 0) {
            // Rounding left u above the total mass; take the last class with
            // nonzero probability.
            for (Eigen::Index j = lp.cols() - 1; j >= 0; --j) {
              if (lp(row, j) > kNegInf) {
                choice = static_cast<int>(j);
                break;
              }
            }
          }
        }
        acc[r] += lp(row, choice);
        if (choice == CharVocab::kEnd) {
          done[r] = true;
          --remaining;
        } else {
          text[r].push_back(vocab.CharAt(choice));
          inputs[r] = choice;
        }
      }
    }
    for (std::size_t r = 0; r < m; ++r) {
      out.push_back({std::move(text[r]), acc[r], std::exp(acc[r])});
    }
  }
  return out;
}

InitialState ProjectSeedStates(const nn::ParamSet& params,
                               const PasswordModelConfig& config,
                               const Tensor& psi) {
  if (!config.conditional) {
    throw InvalidArgument("project_seed: model has no seed projections");
  }
  Graph g(&params);
  const Var p = g.Input(psi.rows() == 1 ? psi : Tensor::Row(psi.vec()));
  const auto states = InitialStates(g, config, p, 1);
  InitialState out;
  for (const auto& [h, c] : states) {
    out.h.push_back(g.value(h));
    out.c.push_back(g.value(c));
  }
  return out;
}

SeededModel MakeSeededModel(const nn::ParamSet& params,
                            const PasswordModelConfig& config, const Tensor& psi,
                            std::string seed_id) {
  return SeededModel(std::make_shared<InferenceNet>(params, config),
                     ProjectSeedStates(params, config, psi), std::move(seed_id));
}

SeededModel MakeBaselineModel(const nn::ParamSet& params,
                              const PasswordModelConfig& config) {
  InitialState zeros;
  for (std::size_t i = 0; i < config.layers; ++i) {
    zeros.h.push_back(Tensor::Zeros(1, config.hidden));
    zeros.c.push_back(Tensor::Zeros(1, config.hidden));
  }
  return SeededModel(std::make_shared<InferenceNet>(params, config),
                     std::move(zeros), "baseline");
}

namespace {

struct Frontier {
  std::vector<std::string> prefixes;
  std::vector<double> log_probs;
  InferenceNet::State state;
  Matrix next;  // log-distribution of the following output, per row
};

void Expand(const SeededModel& model, const std::vector<int>& ids,
            std::size_t max_len, std::size_t level, Frontier& fr,
            std::vector<RankedPassword>& out) {
  const auto rows = static_cast<Eigen::Index>(fr.prefixes.size());
  for (Eigen::Index r = 0; r < rows; ++r) {
    const double lp = fr.log_probs[r] + fr.next(r, CharVocab::kEnd);
    out.push_back({fr.prefixes[r], lp, std::exp(lp)});
  }
  if (level == max_len) return;
  const std::size_t fanout = ids.size();
  const std::size_t total = fr.prefixes.size() * fanout;
  constexpr std::size_t kChunk = 4096;
  for (std::size_t begin = 0; begin < total; begin += kChunk) {
    const std::size_t end = std::min(total, begin + kChunk);
    const auto m = static_cast<Eigen::Index>(end - begin);
    Frontier child;
    std::vector<int> inputs;
    std::vector<Eigen::Index> parents;
    for (std::size_t k = begin; k < end; ++k) {
      const auto parent = static_cast<Eigen::Index>(k / fanout);
      const int id = ids[k % fanout];
      parents.push_back(parent);
      inputs.push_back(id);
      child.prefixes.push_back(fr.prefixes[parent] +
                               model.net().vocab().CharAt(id));
      child.log_probs.push_back(fr.log_probs[parent] + fr.next(parent, id));
    }
    for (std::size_t l = 0; l < fr.state.h.size(); ++l) {
      Matrix h(m, fr.state.h[l].cols()), c(m, fr.state.c[l].cols());
      for (Eigen::Index r = 0; r < m; ++r) {
        h.row(r) = fr.state.h[l].row(parents[r]);
        c.row(r) = fr.state.c[l].row(parents[r]);
      }
      child.state.h.push_back(std::move(h));
      child.state.c.push_back(std::move(c));
    }
    child.next = model.StepLogProbs(inputs, child.state, level + 1);
    Expand(model, ids, max_len, level + 1, child, out);
  }
}

}  // namespace

std::vector<RankedPassword> EnumerateExact(const SeededModel& model,
                                           std::string_view alphabet,
                                           std::size_t max_len) {
  if (max_len > model.max_len()) {
    throw InvalidArgument("enumeration max_len exceeds the model max_len");
  }
  std::vector<int> ids;
  for (char c : alphabet) {
    const int id = model.net().vocab().Id(c);
    if (id < 0) {
      throw InvalidArgument(std::string("character '") + c +
                            "' is not in the model alphabet");
    }
    if (std::find(ids.begin(), ids.end(), id) != ids.end()) {
      throw InvalidArgument("duplicate character in enumeration alphabet");
    }
    ids.push_back(id);
  }
  std::sort(ids.begin(), ids.end());
  std::size_t total = 1;
  std::size_t level = 1;
  for (std::size_t t = 1; t <= max_len; ++t) {
    if (!ids.empty() && level > kMaxEnumeration / ids.size()) {
      total = kMaxEnumeration + 1;
      break;
    }
    level *= ids.size();
    total += level;
    if (total > kMaxEnumeration) break;
  }
  if (total > kMaxEnumeration) {
    throw InvalidArgument(
        "key space too large to enumerate exactly (> 1e6 strings); use the "
        "Monte Carlo estimator instead");
  }
  Frontier root;
  root.prefixes = {""};
  root.log_probs = {0.0};
  root.state = model.Broadcast(1);
  root.next = model.StepLogProbs({CharVocab::kStart}, root.state, 0);
  std::vector<RankedPassword> out;
  out.reserve(total);
  Expand(model, ids, max_len, 0, root, out);
  std::sort(out.begin(), out.end(),
            [](const RankedPassword& a, const RankedPassword& b) {
              if (a.log_prob != b.log_prob) return a.log_prob > b.log_prob;
              return a.password < b.password;
            });
  return out;
}

std::string GreedyDecode(const SeededModel& model) {
  InferenceNet::State state = model.Broadcast(1);
  std::string out;
  int input = CharVocab::kStart;
  for (std::size_t t = 0;; ++t) {
    const Matrix lp = model.StepLogProbs({input}, state, t);
    Eigen::Index best = 0;
    lp.row(0).maxCoeff(&best);
    if (best == CharVocab::kEnd) return out;
    out.push_back(model.net().vocab().CharAt(static_cast<int>(best)));
    input = static_cast<int>(best);
  }
}

}  // namespace uncm::pwmodel
