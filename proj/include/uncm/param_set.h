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

#ifndef UNCM_PARAM_SET_H_
#define UNCM_PARAM_SET_H_

#include <cstdint>
#include <map>
#include <random>
#include <string>
#include <vector>

#include "uncm/tensor.h"

namespace uncm::nn {

// Gradients keyed by parameter path.
using GradMap = std::map<std::string, Tensor>;

// Named trainable arrays together with their Adam moments.
class ParamSet {
 public:
  struct Entry {
    Tensor value;
    Tensor first_moment;
    Tensor second_moment;
  };

  // Registers a new parameter. Throws InvalidArgument if the name is taken.
  Tensor& Add(const std::string& name, Tensor init);

  bool Contains(const std::string& name) const;
  const Tensor& Get(const std::string& name) const;
  Tensor& Mutable(const std::string& name);
  const Entry& entry(const std::string& name) const;
  Entry& mutable_entry(const std::string& name);

  std::vector<std::string> Names() const;
  std::size_t NumScalars() const;
  // Number of scalars under names starting with `prefix`.
  std::size_t NumScalars(const std::string& prefix) const;

  std::int64_t step() const { return step_; }
  void set_step(std::int64_t step) { step_ = step; }

  const std::map<std::string, Entry>& entries() const { return entries_; }

  // Zero gradients shaped like every parameter.
  GradMap ZeroGrads() const;

 private:
  std::map<std::string, Entry> entries_;
  std::int64_t step_ = 0;
};

// Uniform Glorot initialisation: U(-a, a), a = sqrt(6 / (fan_in + fan_out)).
Tensor GlorotUniform(std::size_t fan_in, std::size_t fan_out,
                     std::mt19937_64& rng);

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// One bias-corrected Adam step over every parameter in `grads`. Parameters
// missing from `grads` keep their values and moments. Single writer: the
// caller must not read `params` concurrently.
void AdamUpdate(ParamSet& params, const GradMap& grads,
                const AdamConfig& config = {});

// a += scale * b over every key of b; keys missing from a are inserted.
void Accumulate(GradMap& into, const GradMap& from, double scale = 1.0);

}  // namespace uncm::nn

#endif  // UNCM_PARAM_SET_H_
