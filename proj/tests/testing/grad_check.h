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

// Finite-difference oracle for the autodiff tape. Test-only: it evaluates the
// forward pass only and never consults Graph::Backward for its estimate.

#ifndef UNCM_TESTS_TESTING_GRAD_CHECK_H_
#define UNCM_TESTS_TESTING_GRAD_CHECK_H_

#include <functional>
#include <random>
#include <string>
#include <vector>

#include "uncm/graph.h"
#include "uncm/param_set.h"

namespace uncm::testing {

using LossFn = std::function<nn::Var(nn::Graph&)>;

struct GradCheckResult {
  double max_relative_error = 0.0;
  std::string worst_parameter;
  std::size_t components = 0;
};

// |a - n| / max(|a| + |n|, 1e-6)
double RelativeError(double analytic, double numeric);

// Compares Graph::Backward against central differences (step `h`) for every
// scalar of every parameter in `params`.
GradCheckResult CheckGradients(nn::ParamSet params, const LossFn& loss,
                               double h = 1e-5);

struct GradCase {
  std::string name;
  nn::ParamSet params;
  LossFn loss;
};

// Randomised cases covering every differentiable primitive, both recurrent
// cells and a small two-layer network; `trials_per_op` instances each.
std::vector<GradCase> AllGradCases(int trials_per_op, std::uint64_t seed);

}  // namespace uncm::testing

#endif  // UNCM_TESTS_TESTING_GRAD_CHECK_H_
