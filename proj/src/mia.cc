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

#include "uncm/mia.h"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "uncm/cells.h"
#include "uncm/email_encoder.h"
#include "uncm/errors.h"
#include "uncm/graph.h"

namespace uncm::eval {

namespace {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const Matrix>;

constexpr std::size_t kFirstWidth = 512;
constexpr std::size_t kBnWidths[] = {320, 160, 80, 40};
constexpr double kBnMomentum = 0.1;
constexpr double kBnEps = 1e-5;
constexpr std::size_t kMinLeaks = 20;

std::string DenseName(std::size_t i) { return "mia/d" + std::to_string(i); }
std::string BnName(std::size_t i) { return "mia/bn" + std::to_string(i); }

ConstMap AsMat(const nn::Tensor& t) {
  return ConstMap(t.data().data(), static_cast<Eigen::Index>(t.rows()),
                  static_cast<Eigen::Index>(t.cols()));
}

nn::Tensor Rows(const nn::Tensor& t, std::span<const std::size_t> idx) {
  nn::Tensor out = nn::Tensor::Zeros(idx.size(), t.cols());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    std::copy(t.row(idx[i]).begin(), t.row(idx[i]).end(), out.row(i).begin());
  }
  return out;
}

MiaTriplets Subset(const MiaTriplets& d, std::span<const std::size_t> idx) {
  MiaTriplets out;
  out.features = Rows(d.features, idx);
  for (std::size_t i : idx) out.labels.push_back(d.labels[i]);
  return out;
}

double MeanBce(const std::vector<double>& p, const std::vector<int>& labels) {
  double s = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const double q = std::clamp(labels[i] ? p[i] : 1.0 - p[i], 1e-12, 1.0);
    s -= std::log(q);
  }
  return s / static_cast<double>(p.size());
}

double NormalQuantile(double p) {
  double lo = -10.0, hi = 10.0;
  for (int i = 0; i < 200; ++i) {
    const double mid = 0.5 * (lo + hi);
    if (0.5 * std::erfc(-mid / std::sqrt(2.0)) < p) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

}  // namespace

void MiaConfig::Validate() const {
  if (k == 0) throw InvalidArgument("mia: k must be >= 1");
  if (seeds_per_leak == 0) throw InvalidArgument("mia: seeds_per_leak must be >= 1");
  if (runs == 0) throw InvalidArgument("mia: runs must be >= 1");
  if (batch < 2) throw InvalidArgument("mia: batch must be >= 2");
  if (max_epochs == 0 || patience == 0) {
    throw InvalidArgument("mia: max_epochs and patience must be >= 1");
  }
  if (!(validation_fraction > 0 && validation_fraction < 1)) {
    throw InvalidArgument("mia: validation_fraction must lie in (0, 1)");
  }
  if (noise_seeds && dp) {
    throw InvalidArgument("mia: noise seeds and private seeds are exclusive");
  }
}

MiaTriplets BuildTriplets(const UncmModel& model, const LeakCollection& leaks,
                          const MiaConfig& config, std::mt19937_64& rng) {
  config.Validate();
  if (config.dp && !model.private_variant()) {
    throw Conflict("mia: private seeds need a model with the private attention path");
  }
  const std::size_t seed_dim = model.config.mix.seed_dim;
  const std::size_t value_dim = model.config.mix.value_dim;
  std::vector<std::vector<double>> rows;
  MiaTriplets out;
  std::normal_distribution<double> normal(0.0, 1.0);
  for (const CredentialLeak& leak : leaks.leaks) {
    std::vector<Account> usable;
    std::vector<encoder::EncodedInput> inputs;
    for (const Account& a : leak.accounts) {
      try {
        inputs.push_back(encoder::Tokenize(a, model.config.encoder, model.vocabs));
        usable.push_back(a);
      } catch (const MalformedEmail&) {
      }
    }
    if (usable.size() < 2 * config.k) continue;
    const nn::Tensor eta = EncodeValues(model, inputs);
    for (std::size_t s = 0; s < config.seeds_per_leak; ++s) {
      const auto order = SubsampleIndices(usable.size(), 2 * config.k, rng);
      std::vector<Account> members;
      for (std::size_t i = 0; i < config.k; ++i) members.push_back(usable[order[i]]);
      nn::Tensor psi;
      if (config.noise_seeds) {
        psi = nn::Tensor::Zeros(1, seed_dim);
        for (double& x : psi.data()) x = normal(rng);
      } else {
        const ConfigSeed seed =
            ComputeSeed(model, members, config.k, rng(), config.dp);
        psi = seed.psi;
        if (seed.dp) {
          out.epsilon = seed.dp->epsilon;
          out.delta = seed.dp->delta;
        }
      }
      for (std::size_t i = 0; i < order.size(); ++i) {
        std::vector<double> row(psi.data().begin(), psi.data().end());
        const auto e = eta.row(order[i]);
        row.insert(row.end(), e.begin(), e.end());
        rows.push_back(std::move(row));
        out.labels.push_back(i < config.k ? 1 : 0);
      }
      ++out.seeds;
    }
  }
  if (rows.empty()) throw InvalidArgument("mia: no leak holds 2k parseable accounts");
  out.features = nn::Tensor::Zeros(rows.size(), seed_dim + value_dim);
  for (std::size_t r = 0; r < rows.size(); ++r) {
    std::copy(rows[r].begin(), rows[r].end(), out.features.row(r).begin());
  }
  return out;
}

Distinguisher::Distinguisher(std::size_t input_dim, std::mt19937_64& rng) {
  nn::InitDense(params_, DenseName(0), input_dim, kFirstWidth, rng);
  std::size_t in = kFirstWidth;
  for (std::size_t i = 0; i < std::size(kBnWidths); ++i) {
    const std::size_t w = kBnWidths[i];
    nn::InitDense(params_, DenseName(i + 1), in, w, rng);
    params_.Add(BnName(i + 1) + "/gamma", nn::Tensor::Filled(1, w, 1.0));
    params_.Add(BnName(i + 1) + "/beta", nn::Tensor::Zeros(1, w));
    bn_.push_back({std::vector<double>(w, 0.0), std::vector<double>(w, 1.0)});
    in = w;
  }
  nn::InitDense(params_, DenseName(std::size(kBnWidths) + 1), in, 1, rng);
  in_mean_.assign(input_dim, 0.0);
  in_std_.assign(input_dim, 1.0);
}

std::vector<double> Distinguisher::Predict(const nn::Tensor& features) const {
  if (features.cols() != in_mean_.size()) {
    throw ShapeError("distinguisher input width mismatch");
  }
  Matrix x = AsMat(features);
  for (Eigen::Index c = 0; c < x.cols(); ++c) {
    x.col(c) = (x.col(c).array() - in_mean_[c]) / in_std_[c];
  }
  auto dense = [&](const Matrix& in, std::size_t i) {
    Matrix out = in * AsMat(params_.Get(DenseName(i) + "/w"));
    out.rowwise() += AsMat(params_.Get(DenseName(i) + "/b")).row(0);
    return out;
  };
  Matrix h = dense(x, 0);
  for (std::size_t i = 0; i < bn_.size(); ++i) {
    h = dense(h, i + 1);
    const auto gamma = AsMat(params_.Get(BnName(i + 1) + "/gamma")).row(0);
    const auto beta = AsMat(params_.Get(BnName(i + 1) + "/beta")).row(0);
    for (Eigen::Index c = 0; c < h.cols(); ++c) {
      const double inv = 1.0 / std::sqrt(bn_[i].var[c] + kBnEps);
      h.col(c) = ((h.col(c).array() - bn_[i].mean[c]) * inv * gamma[c] + beta[c])
                     .max(0.0);
    }
  }
  const Matrix logit = dense(h, bn_.size() + 1);
  std::vector<double> p(static_cast<std::size_t>(logit.rows()));
  for (Eigen::Index r = 0; r < logit.rows(); ++r) {
    p[r] = 1.0 / (1.0 + std::exp(-logit(r, 0)));
  }
  return p;
}

double Distinguisher::Accuracy(const MiaTriplets& data) const {
  if (data.labels.empty()) throw InvalidArgument("mia: empty evaluation set");
  const std::vector<double> p = Predict(data.features);
  std::size_t correct = 0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    if ((p[i] >= 0.5) == (data.labels[i] == 1)) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(p.size());
}

std::size_t Distinguisher::Fit(const MiaTriplets& data, const MiaConfig& config,
                               std::mt19937_64& rng) {
  config.Validate();
  const std::size_t n = data.labels.size();
  const std::size_t d = data.features.cols();
  if (n < 4) throw InvalidArgument("mia: too few training rows");
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::shuffle(idx.begin(), idx.end(), rng);
  const std::size_t n_valid = std::max<std::size_t>(
      1, static_cast<std::size_t>(config.validation_fraction * static_cast<double>(n)));
  const MiaTriplets valid = Subset(data, std::span(idx).first(n_valid));
  std::vector<std::size_t> fit(idx.begin() + static_cast<std::ptrdiff_t>(n_valid), idx.end());

  const ConstMap all = AsMat(data.features);
  for (std::size_t c = 0; c < d; ++c) {
    double mean = 0.0, sq = 0.0;
    for (std::size_t r : fit) mean += all(r, c);
    mean /= static_cast<double>(fit.size());
    for (std::size_t r : fit) sq += (all(r, c) - mean) * (all(r, c) - mean);
    in_mean_[c] = mean;
    in_std_[c] = std::max(std::sqrt(sq / static_cast<double>(fit.size())), 1e-8);
  }

  double best_loss = std::numeric_limits<double>::infinity();
  nn::ParamSet best_params = params_;
  std::vector<BnStats> best_bn = bn_;
  std::size_t bad = 0, epochs = 0;
  for (std::size_t epoch = 1; epoch <= config.max_epochs; ++epoch) {
    epochs = epoch;
    std::shuffle(fit.begin(), fit.end(), rng);
    for (std::size_t begin = 0; begin + 1 < fit.size(); begin += config.batch) {
      const std::size_t end = std::min(fit.size(), begin + config.batch);
      if (end - begin < 2) break;
      const std::span<const std::size_t> b(fit.data() + begin, end - begin);
      nn::Tensor x = Rows(data.features, b);
      for (std::size_t r = 0; r < x.rows(); ++r) {
        for (std::size_t c = 0; c < d; ++c) {
          x.at(r, c) = (x.at(r, c) - in_mean_[c]) / in_std_[c];
        }
      }
      nn::Graph g(&params_);
      nn::Var h = nn::Dense(g, DenseName(0), g.Input(std::move(x)));
      for (std::size_t i = 0; i < bn_.size(); ++i) {
        h = nn::Dense(g, DenseName(i + 1), h);
        const ConstMap pre = AsMat(g.value(h));
        const Eigen::RowVectorXd mean = pre.colwise().mean();
        const Eigen::RowVectorXd var =
            (pre.rowwise() - mean).array().square().colwise().mean();
        for (Eigen::Index c = 0; c < mean.size(); ++c) {
          bn_[i].mean[c] = (1 - kBnMomentum) * bn_[i].mean[c] + kBnMomentum * mean[c];
          bn_[i].var[c] = (1 - kBnMomentum) * bn_[i].var[c] + kBnMomentum * var[c];
        }
        h = g.Relu(g.BatchNorm(h, g.Param(BnName(i + 1) + "/gamma"),
                               g.Param(BnName(i + 1) + "/beta"), kBnEps));
      }
      const nn::Var logit = nn::Dense(g, DenseName(bn_.size() + 1), h);
      // Two-class softmax over (0, logit) equals a sigmoid on the logit.
      const nn::Var zero = g.Input(nn::Tensor::Zeros(b.size(), 1));
      std::vector<int> targets;
      for (std::size_t r : b) targets.push_back(data.labels[r]);
      const nn::Var loss = g.SoftmaxCrossEntropy(
          g.Concat({zero, logit}), std::move(targets),
          std::vector<double>(b.size(), 1.0 / static_cast<double>(b.size())));
      nn::AdamUpdate(params_, g.Backward(loss), config.adam);
    }
    const double loss = MeanBce(Predict(valid.features), valid.labels);
    if (loss < best_loss) {
      best_loss = loss;
      best_params = params_;
      best_bn = bn_;
      bad = 0;
    } else if (++bad >= config.patience) {
      break;
    }
  }
  params_ = std::move(best_params);
  bn_ = std::move(best_bn);
  return epochs;
}

MiaResult RunMia(const UncmModel& model, const LeakCollection& train,
                 const LeakCollection& test, const MiaConfig& config) {
  config.Validate();
  if (train.leaks.size() + test.leaks.size() < kMinLeaks) {
    throw InvalidArgument("mia: needs at least 20 leaks");
  }
  if (test.leaks.empty()) throw InvalidArgument("mia: empty test collection");
  MiaResult result;
  std::mt19937_64 rng(config.rng_seed);
  for (std::size_t run = 0; run < config.runs; ++run) {
    const MiaTriplets tr = BuildTriplets(model, train, config, rng);
    const MiaTriplets te = BuildTriplets(model, test, config, rng);
    Distinguisher dist(tr.features.cols(), rng);
    dist.Fit(tr, config, rng);
    result.accuracies.push_back(dist.Accuracy(te));
    result.train_rows = tr.labels.size();
    result.test_rows = te.labels.size();
    if (te.epsilon) {
      result.epsilon = te.epsilon;
      result.delta = te.delta;
    }
  }
  const double n = static_cast<double>(result.accuracies.size());
  result.mean = std::accumulate(result.accuracies.begin(), result.accuracies.end(), 0.0) / n;
  double sq = 0.0;
  for (double a : result.accuracies) sq += (a - result.mean) * (a - result.mean);
  result.stddev = n > 1 ? std::sqrt(sq / (n - 1)) : 0.0;
  return result;
}

double DpAccuracyBound(double epsilon, double delta) {
  if (!(epsilon >= 0) || !(delta >= 0 && delta <= 1)) {
    throw InvalidArgument("dp bound: need epsilon >= 0 and delta in [0, 1]");
  }
  const double e = std::exp(epsilon);
  return std::min(1.0, 0.5 * (1.0 + delta + (e - 1.0) * (1.0 - delta) / (e + 1.0)));
}

double DpAccuracyLimit(double epsilon, double delta, std::size_t n,
                       double confidence) {
  if (n == 0) throw InvalidArgument("dp bound: n must be >= 1");
  if (!(confidence > 0.5 && confidence < 1)) {
    throw InvalidArgument("dp bound: confidence must lie in (0.5, 1)");
  }
  const double b = DpAccuracyBound(epsilon, delta);
  return std::min(1.0, b + NormalQuantile(confidence) *
                               std::sqrt(b * (1 - b) / static_cast<double>(n)));
}

}  // namespace uncm::eval
