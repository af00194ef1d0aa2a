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

#include "uncm/eval.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "uncm/errors.h"

namespace uncm::eval {

namespace {

void CheckBudgets(std::span<const double> budgets) {
  if (budgets.empty()) throw InvalidArgument("curve: no budgets");
  for (std::size_t i = 1; i < budgets.size(); ++i) {
    if (!(budgets[i] > budgets[i - 1])) {
      throw InvalidArgument("curve: budgets must be strictly ascending");
    }
  }
}

std::size_t BudgetIndex(const GuessingCurve& c, double budget) {
  for (std::size_t i = 0; i < c.budgets.size(); ++i) {
    if (c.budgets[i] == budget) return i;
  }
  throw InvalidArgument("budget not on the curve grid");
}

const char* const kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                "#9467bd", "#8c564b"};

}  // namespace

std::vector<double> DefaultBudgets() {
  std::vector<double> b;
  for (int e = 0; e <= 12; ++e) b.push_back(std::pow(10.0, e));
  return b;
}

GuessingCurve CurveFromGuessNumbers(std::span<const double> guess_numbers,
                                    std::span<const double> budgets) {
  if (guess_numbers.empty()) throw InvalidArgument("curve: empty leak");
  CheckBudgets(budgets);
  std::vector<double> sorted(guess_numbers.begin(), guess_numbers.end());
  std::sort(sorted.begin(), sorted.end());
  GuessingCurve c;
  c.budgets.assign(budgets.begin(), budgets.end());
  for (double b : budgets) {
    const auto hit = std::upper_bound(sorted.begin(), sorted.end(), b) - sorted.begin();
    c.fractions.push_back(static_cast<double>(hit) /
                          static_cast<double>(sorted.size()));
  }
  return c;
}

std::vector<double> GuessNumbers(const guess::MCEstimator& estimator,
                                 const PasswordDistribution& model,
                                 std::span<const std::string> passwords) {
  const std::vector<double> lps = model.LogProbs(passwords);
  std::vector<double> out;
  out.reserve(lps.size());
  for (double lp : lps) out.push_back(estimator.GuessNumberFromLogProb(lp));
  return out;
}

GuessingCurve LeakCurve(const guess::MCEstimator& estimator,
                        const PasswordDistribution& model,
                        const CredentialLeak& leak,
                        std::span<const double> budgets) {
  if (leak.accounts.empty()) throw InvalidArgument("curve: empty leak " + leak.id);
  std::vector<std::string> passwords;
  passwords.reserve(leak.size());
  for (const Account& a : leak.accounts) passwords.push_back(a.password);
  return CurveFromGuessNumbers(GuessNumbers(estimator, model, passwords), budgets);
}

GuessingCurve AverageCurves(std::span<const GuessingCurve> curves) {
  if (curves.empty()) throw InvalidArgument("average: no curves");
  GuessingCurve out;
  out.budgets = curves.front().budgets;
  out.fractions.assign(out.budgets.size(), 0.0);
  for (const GuessingCurve& c : curves) {
    if (c.budgets != out.budgets || c.fractions.size() != out.budgets.size()) {
      throw InvalidArgument("average: curves have different budget grids");
    }
    for (std::size_t i = 0; i < c.fractions.size(); ++i) {
      out.fractions[i] += c.fractions[i] / static_cast<double>(curves.size());
    }
  }
  return out;
}

std::optional<double> GainRatio(const GuessingCurve& a, const GuessingCurve& b,
                                double budget) {
  if (a.budgets != b.budgets) throw InvalidArgument("gain: different budget grids");
  const std::size_t i = BudgetIndex(a, budget);
  if (b.fractions[i] == 0.0) return std::nullopt;
  return a.fractions[i] / b.fractions[i];
}

std::string CurvesToCsv(std::span<const NamedCurve> curves) {
  std::ostringstream os;
  os.precision(17);
  os << "series,budget,fraction\n";
  for (const NamedCurve& nc : curves) {
    for (std::size_t i = 0; i < nc.curve.budgets.size(); ++i) {
      os << nc.name << ',' << nc.curve.budgets[i] << ',' << nc.curve.fractions[i]
         << '\n';
    }
  }
  return os.str();
}

std::string CurvesToSvg(std::span<const NamedCurve> curves,
                        const std::string& title) {
  constexpr double kW = 640, kH = 400, kLeft = 60, kRight = 160, kTop = 40,
                   kBottom = 50;
  double lo = std::numeric_limits<double>::infinity();
  double hi = -lo;
  for (const NamedCurve& nc : curves) {
    for (double b : nc.curve.budgets) {
      lo = std::min(lo, std::log10(b));
      hi = std::max(hi, std::log10(b));
    }
  }
  if (!(hi > lo)) hi = lo + 1;
  auto x = [&](double b) {
    return kLeft + (std::log10(b) - lo) / (hi - lo) * (kW - kLeft - kRight);
  };
  auto y = [&](double f) { return kTop + (1 - f) * (kH - kTop - kBottom); };
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kW
     << "\" height=\"" << kH << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<text x=\"" << kW / 2 << "\" y=\"20\" text-anchor=\"middle\">" << title
     << "</text>\n";
  os << "<rect x=\"" << kLeft << "\" y=\"" << kTop << "\" width=\""
     << kW - kLeft - kRight << "\" height=\"" << kH - kTop - kBottom
     << "\" fill=\"none\" stroke=\"#444\"/>\n";
  for (int e = static_cast<int>(std::ceil(lo)); e <= static_cast<int>(hi); ++e) {
    const double px = x(std::pow(10.0, e));
    os << "<text x=\"" << px << "\" y=\"" << kH - kBottom + 16
       << "\" text-anchor=\"middle\">1e" << e << "</text>\n";
  }
  for (int t = 0; t <= 4; ++t) {
    os << "<text x=\"" << kLeft - 6 << "\" y=\"" << y(t / 4.0) + 4
       << "\" text-anchor=\"end\">" << t * 25 << "%</text>\n";
  }
  os << "<text x=\"" << (kLeft + kW - kRight) / 2 << "\" y=\"" << kH - 10
     << "\" text-anchor=\"middle\">guesses</text>\n";
  for (std::size_t s = 0; s < curves.size(); ++s) {
    const char* color = kPalette[s % std::size(kPalette)];
    os << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"2\" points=\"";
    const GuessingCurve& c = curves[s].curve;
    for (std::size_t i = 0; i < c.budgets.size(); ++i) {
      os << x(c.budgets[i]) << ',' << y(c.fractions[i]) << ' ';
    }
    os << "\"/>\n";
    os << "<text x=\"" << kW - kRight + 10 << "\" y=\"" << kTop + 16 * (s + 1)
       << "\" fill=\"" << color << "\">" << curves[s].name << "</text>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::vector<LeakResult> RunAttack(const UncmModel& model,
                                  const PasswordDistribution& baseline,
                                  const LeakCollection& test,
                                  const AttackConfig& config,
                                  const UncmModel* private_model,
                                  std::optional<DpParams> dp) {
  if (test.leaks.empty()) throw InvalidArgument("attack: empty test collection");
  std::mt19937_64 rng(config.rng_seed);
  const guess::MCEstimator base_est =
      guess::BuildEstimator(baseline, config.samples, rng);
  std::vector<LeakResult> results;
  for (const CredentialLeak& leak : test.leaks) {
    LeakResult r;
    r.leak_id = leak.id;
    r.community = leak.metadata.community;
    const std::uint64_t seed_rng = rng();
    const ConfigSeed seed = ComputeSeed(model, leak.accounts, config.k, seed_rng);
    const pwmodel::SeededModel seeded = MakeSeeded(model, seed);
    const guess::MCEstimator est = guess::BuildEstimator(seeded, config.samples, rng);
    r.seeded = LeakCurve(est, seeded, leak, config.budgets);
    r.baseline = LeakCurve(base_est, baseline, leak, config.budgets);
    if (private_model != nullptr) {
      const ConfigSeed ps =
          ComputeSeed(*private_model, leak.accounts, config.k, rng(), dp);
      const pwmodel::SeededModel pm = MakeSeeded(*private_model, ps);
      const guess::MCEstimator pest = guess::BuildEstimator(pm, config.samples, rng);
      r.private_seeded = LeakCurve(pest, pm, leak, config.budgets);
      if (ps.dp) r.epsilon = ps.dp->epsilon;
    }
    results.push_back(std::move(r));
  }
  return results;
}

}  // namespace uncm::eval
