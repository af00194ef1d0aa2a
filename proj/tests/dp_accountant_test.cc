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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "uncm/errors.h"

namespace uncm::dp {
namespace {

// A_alpha = E_{x ~ N(0, z^2)} [((1 - q) + q exp((2x - 1) / (2 z^2)))^alpha],
// integrated with the composite Simpson rule.
double QuadratureRdp(double q, double z, int alpha) {
  const double s2 = z * z;
  const double lo = -30.0 * z;
  const double hi = 30.0 * z + alpha;
  const int steps = 200000;
  const double h = (hi - lo) / steps;
  auto f = [&](double x) {
    const double mu0 = std::exp(-x * x / (2 * s2)) / std::sqrt(2 * M_PI * s2);
    const double ratio = (1 - q) + q * std::exp((2 * x - 1) / (2 * s2));
    return mu0 * std::pow(ratio, alpha);
  };
  double sum = f(lo) + f(hi);
  for (int i = 1; i < steps; ++i) sum += f(lo + i * h) * (i % 2 ? 4 : 2);
  return std::log(sum * h / 3) / (alpha - 1);
}

TEST(ClipL2, Examples) {
  EXPECT_EQ(ClipL2(std::vector<double>{2, 0}, 1.0), (std::vector<double>{1, 0}));
  EXPECT_EQ(ClipL2(std::vector<double>{0.3, 0.4}, 1.0),
            (std::vector<double>{0.3, 0.4}));
  EXPECT_THROW(ClipL2(std::vector<double>{1}, 0.0), InvalidArgument);
}

TEST(ClipL2, NormNeverExceedsBoundAndDirectionKept) {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> normal(0.0, 5.0);
  for (int t = 0; t < 1000; ++t) {
    std::vector<double> v(7);
    for (double& x : v) x = normal(rng);
    const double s = 0.5 + (t % 5);
    const std::vector<double> c = ClipL2(v, s);
    EXPECT_LE(nn::L2Norm(c), s * (1 + 1e-12));
    const double ratio = c[0] / v[0];
    for (std::size_t i = 0; i < v.size(); ++i) {
      EXPECT_NEAR(c[i], ratio * v[i], 1e-12);
    }
  }
}

TEST(EpsilonGaussian, PublishedWorstCase) {
  const GaussianEpsilon e = EpsilonGaussian(3.0, 1e-2 / 100);
  EXPECT_NEAR(e.epsilon, 1.448, 0.02);
  EXPECT_TRUE(e.loose);
}

TEST(EpsilonGaussian, FormulaValue) {
  EXPECT_NEAR(EpsilonGaussian(1.0, 1e-5).epsilon,
              std::sqrt(2 * std::log(1.25e5)), 1e-12);
  EXPECT_NEAR(EpsilonGaussian(1.0, 1e-5).epsilon, 4.843, 5e-3);
  EXPECT_FALSE(EpsilonGaussian(10.0, 1e-5).loose);
}

TEST(EpsilonGaussian, DecreasingInZ) {
  double prev = EpsilonGaussian(0.5, 1e-4).epsilon;
  for (double z = 0.75; z <= 10; z += 0.25) {
    const double e = EpsilonGaussian(z, 1e-4).epsilon;
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(EpsilonGaussian, RejectsInvalidInputs) {
  EXPECT_THROW(EpsilonGaussian(0.0, 1e-4), InvalidArgument);
  EXPECT_THROW(EpsilonGaussian(1.0, 0.0), InvalidArgument);
  EXPECT_THROW(EpsilonGaussian(1.0, 1.0), InvalidArgument);
}

TEST(SubsampledRdp, MatchesNumericalIntegration) {
  struct Point {
    double q;
    double z;
    int alpha;
  };
  for (const Point& pt : {Point{0.01, 3.0, 8}, Point{0.1, 2.0, 4},
                          Point{0.5, 1.5, 16}}) {
    const double oracle = QuadratureRdp(pt.q, pt.z, pt.alpha);
    EXPECT_NEAR(SubsampledGaussianRdp(pt.q, pt.z, pt.alpha), oracle,
                1e-6 * std::max(1.0, std::abs(oracle)))
        << "q=" << pt.q << " z=" << pt.z << " alpha=" << pt.alpha;
  }
}

TEST(SubsampledRdp, FullRateIsPlainGaussian) {
  for (int alpha : {2, 5, 32}) {
    EXPECT_DOUBLE_EQ(SubsampledGaussianRdp(1.0, 3.0, alpha), alpha / 18.0);
  }
}

TEST(EpsilonSubsampled, CloseToClassicalAtFullRate) {
  const double classical = EpsilonGaussian(3.0, 1e-4).epsilon;
  EXPECT_LE(EpsilonSubsampled(3.0, 1.0, 1e-4), 1.2 * classical);
}

TEST(EpsilonSubsampled, AmplificationAndMonotonicity) {
  const double full = EpsilonSubsampled(3.0, 1.0, 1e-4);
  EXPECT_LT(EpsilonSubsampled(3.0, 0.001, 1e-4), full);
  double prev = 0.0;
  for (double q : {0.001, 0.01, 0.1, 1.0}) {
    const double e = EpsilonSubsampled(3.0, q, 1e-4);
    EXPECT_GE(e, prev);
    prev = e;
  }
}

TEST(EpsilonSubsampled, RejectsInvalidRate) {
  EXPECT_THROW(EpsilonSubsampled(3.0, 0.0, 1e-4), InvalidArgument);
  EXPECT_THROW(EpsilonSubsampled(3.0, 1.5, 1e-4), InvalidArgument);
}

TEST(AccountSeed, UsesTighterBound) {
  const PrivacyAccount full = AccountSeed(3.0, 1.0, 1.0, 1e-4);
  EXPECT_NEAR(full.epsilon, 1.448, 0.02);
  const PrivacyAccount sub = AccountSeed(3.0, 1.0, 0.05, 1e-4);
  EXPECT_LT(sub.epsilon, full.epsilon);
  EXPECT_THROW(AccountSeed(3.0, 0.0, 0.5, 1e-4), InvalidArgument);
}

TEST(DeltaForLeak, Policy) {
  EXPECT_DOUBLE_EQ(DeltaForLeak(100), 1e-4);
  EXPECT_DOUBLE_EQ(DeltaForLeak(1000, 1e-3), 1e-6);
  EXPECT_THROW(DeltaForLeak(0), InvalidArgument);
}

}  // namespace
}  // namespace uncm::dp
