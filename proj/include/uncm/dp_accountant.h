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

#ifndef UNCM_DP_ACCOUNTANT_H_
#define UNCM_DP_ACCOUNTANT_H_

#include <span>
#include <vector>

#include "uncm/tensor.h"

namespace uncm::dp {

// C_s(v) = v / max(1, ||v|| / s). Throws InvalidArgument when s <= 0.
std::vector<double> ClipL2(std::span<const double> v, double s);
nn::Tensor ClipL2(const nn::Tensor& v, double s);

struct GaussianEpsilon {
  double epsilon = 0.0;
  // The classical bound is only proven for epsilon < 1; set when it is not.
  bool loose = false;
};

// Classical Gaussian-mechanism bound eps = sqrt(2 ln(1.25 / delta)) / z.
GaussianEpsilon EpsilonGaussian(double z, double delta);

// Orders used by the RDP accountant: 2..64, 128 and 256.
const std::vector<double>& RdpOrders();

// RDP of one application of the Poisson-subsampled Gaussian mechanism with
// sampling rate q and noise multiplier z, at integer order alpha >= 2.
double SubsampledGaussianRdp(double q, double z, int alpha);

// eps = min over orders of RDP(alpha) + ln(1/delta) / (alpha - 1).
double EpsilonSubsampled(double z, double q, double delta);

// Privacy record of one released configuration seed.
struct PrivacyAccount {
  double z = 0.0;       // noise multiplier
  double s = 0.0;       // clip norm
  double q_rate = 1.0;  // k_used / |A_inf|
  double delta = 0.0;
  double epsilon = 0.0;
};

// Accounts one seed release; epsilon is the tighter of the classical bound
// and the subsampled RDP bound. Validates z > 0, s > 0, 0 < q <= 1 and
// 0 < delta < 1.
PrivacyAccount AccountSeed(double z, double s, double q_rate, double delta);

// delta = numerator / leak_size; numerator 1e-2 by default (1e-3 and 1e-4
// give the stricter settings).
double DeltaForLeak(std::size_t leak_size, double numerator = 1e-2);

}  // namespace uncm::dp

#endif  // UNCM_DP_ACCOUNTANT_H_
