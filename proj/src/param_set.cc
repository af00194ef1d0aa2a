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

#include "uncm/param_set.h"

#include <cmath>
#include <utility>

#include "uncm/errors.h"

namespace uncm::nn {

Tensor& ParamSet::Add(const std::string& name, Tensor init) {
  if (entries_.count(name)) {
    throw InvalidArgument("parameter already registered: " + name);
  }
  Entry e;
  e.first_moment = Tensor(init.shape());
  e.second_moment = Tensor(init.shape());
  e.value = std::move(init);
  return entries_.emplace(name, std::move(e)).first->second.value;
}

bool ParamSet::Contains(const std::string& name) const {
  return entries_.count(name) > 0;
}

const ParamSet::Entry& ParamSet::entry(const std::string& name) const {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw NotFound("unknown parameter: " + name);
  return it->second;
}

ParamSet::Entry& ParamSet::mutable_entry(const std::string& name) {
  auto it = entries_.find(name);
  if (it == entries_.end()) throw NotFound("unknown parameter: " + name);
  return it->second;
}

const Tensor& ParamSet::Get(const std::string& name) const {
  return entry(name).value;
}

Tensor& ParamSet::Mutable(const std::string& name) {
  return mutable_entry(name).value;
}

std::vector<std::string> ParamSet::Names() const {
  std::vector<std::string> names;
  names.reserve(entries_.size());
  for (const auto& [name, _] : entries_) names.push_back(name);
  return names;
}

std::size_t ParamSet::NumScalars() const { return NumScalars(""); }

std::size_t ParamSet::NumScalars(const std::string& prefix) const {
  std::size_t n = 0;
  for (const auto& [name, e] : entries_) {
    if (name.compare(0, prefix.size(), prefix) == 0) n += e.value.size();
  }
  return n;
}

GradMap ParamSet::ZeroGrads() const {
  GradMap grads;
  for (const auto& [name, e] : entries_) grads[name] = Tensor(e.value.shape());
  return grads;
}

Tensor GlorotUniform(std::size_t fan_in, std::size_t fan_out,
                     std::mt19937_64& rng) {
  const double limit =
      std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  Tensor t({fan_in, fan_out});
  for (double& x : t.data()) x = dist(rng);
  return t;
}

void AdamUpdate(ParamSet& params, const GradMap& grads,
                const AdamConfig& config) {
  for (const auto& [name, g] : grads) {
    const ParamSet::Entry& e = params.entry(name);
    if (!e.value.SameShape(g)) {
      throw ShapeError("adam_update: gradient for " + name + " has shape " +
                       g.ShapeString() + ", parameter has " +
                       e.value.ShapeString());
    }
    g.CheckFinite("gradient of " + name);
  }
  const std::int64_t t = params.step() + 1;
  const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(t));
  const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(t));
  for (const auto& [name, g] : grads) {
    ParamSet::Entry& e = params.mutable_entry(name);
    auto p = e.value.data();
    auto m = e.first_moment.data();
    auto v = e.second_moment.data();
    auto gd = g.data();
    for (std::size_t i = 0; i < p.size(); ++i) {
      m[i] = config.beta1 * m[i] + (1.0 - config.beta1) * gd[i];
      v[i] = config.beta2 * v[i] + (1.0 - config.beta2) * gd[i] * gd[i];
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p[i] -= config.learning_rate * m_hat / (std::sqrt(v_hat) + config.epsilon);
    }
  }
  params.set_step(t);
}

void Accumulate(GradMap& into, const GradMap& from, double scale) {
  for (const auto& [name, g] : from) {
    auto it = into.find(name);
    if (it == into.end()) {
      Tensor copy = g;
      for (double& x : copy.data()) x *= scale;
      into.emplace(name, std::move(copy));
      continue;
    }
    if (!it->second.SameShape(g)) {
      throw ShapeError("accumulate: shape mismatch for " + name);
    }
    auto dst = it->second.data();
    auto src = g.data();
    for (std::size_t i = 0; i < dst.size(); ++i) dst[i] += scale * src[i];
  }
}

}  // namespace uncm::nn
