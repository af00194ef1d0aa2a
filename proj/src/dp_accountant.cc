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

#include "uncm/dp_accountant.h"

#include <algorithm>
#include <cmath>
#include <limits>

#include "uncm/errors.h"

namespace uncm::dp {

namespace {

void CheckZ(double z) {
  if (!(z > 0) || !std::isfinite(z)) {
    throw InvalidArgument("noise multiplier z must be finite and > 0");
  }
}

void CheckDelta(double delta) {
  if (!(delta > 0 && delta < 1)) {
    throw InvalidArgument("delta must lie within (0, 1)");
  }
}

void CheckRate(double q) {
  if (!(q > 0 && q <= 1)) {
    throw InvalidArgument("sampling rate q must lie within (0, 1]");
  }
}

double LogAddExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(-std::abs(a - b)));
}

double LogBinomial(int n, int k) {
  return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

}  // namespace

std::vector<double> ClipL2(std::span<const double> v, double s) {
  if (!(s > 0)) throw InvalidArgument("clip norm s must be > 0");
  const double divisor = std::max(1.0, nn::L2Norm(v) / s);
  std::vector<double> out(v.begin(), v.end());
  for (double& x : out) x /= divisor;
  return out;
}

nn::Tensor ClipL2(const nn::Tensor& v, double s) {
  return nn::Tensor(v.shape(), ClipL2(v.data(), s));
}

GaussianEpsilon EpsilonGaussian(double z, double delta) {
  CheckZ(z);
  CheckDelta(delta);
  GaussianEpsilon out;
  out.epsilon = std::sqrt(2.0 * std::log(1.25 / delta)) / z;
  out.loose = out.epsilon > 1.0;
  return out;
}

const std::vector<double>& RdpOrders() {
  static const std::vector<double> orders = [] {
    std::vector<double> o;
    for (int a = 2; a <= 64; ++a) o.push_back(a);
    o.push_back(128);
    o.push_back(256);
    return o;
  }();
  return orders;
}

double SubsampledGaussianRdp(double q, double z, int alpha) {
  CheckZ(z);
  CheckRate(q);
  if (alpha < 2) throw InvalidArgument("RDP order must be >= 2");
  const double sigma2 = z * z;
  if (q == 1.0) return alpha / (2.0 * sigma2);
  // log A_alpha = log sum_k C(alpha,k) (1-q)^(alpha-k) q^k exp((k^2-k)/(2 s^2))
  double log_a = -std::numeric_limits<double>::infinity();
  const double log_q = std::log(q);
  const double log_1mq = std::log1p(-q);
  for (int k = 0; k <= alpha; ++k) {
    const double term = LogBinomial(alpha, k) + (alpha - k) * log_1mq +
                        k * log_q + (static_cast<double>(k) * k - k) / (2 * sigma2);
    log_a = LogAddExp(log_a, term);
  }
  return log_a / (alpha - 1);
}

double EpsilonSubsampled(double z, double q, double delta) {
  CheckZ(z);
  CheckRate(q);
  CheckDelta(delta);
  double best = std::numeric_limits<double>::infinity();
  for (double alpha : RdpOrders()) {
    const double rdp = SubsampledGaussianRdp(q, z, static_cast<int>(alpha));
    best = std::min(best, rdp + std::log(1.0 / delta) / (alpha - 1));
  }
  return best;
}

PrivacyAccount AccountSeed(double z, double s, double q_rate, double delta) {
  CheckZ(z);
  CheckRate(q_rate);
  CheckDelta(delta);
  if (!(s > 0)) throw InvalidArgument("clip norm s must be > 0");
  PrivacyAccount account{z, s, q_rate, delta, 0.0};
  account.epsilon = std::min(EpsilonGaussian(z, delta).epsilon,
                             EpsilonSubsampled(z, q_rate, delta));
  return account;
}

double DeltaForLeak(std::size_t leak_size, double numerator) {
  if (leak_size == 0) throw InvalidArgument("leak size must be positive");
  return numerator / static_cast<double>(leak_size);
}

}  // namespace uncm::dp
