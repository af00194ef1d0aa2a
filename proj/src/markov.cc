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

#include "uncm/markov.h"

#include <algorithm>
#include <cmath>
#include <limits>
#include <set>

#include "uncm/errors.h"

namespace uncm::markov {

namespace {

constexpr char kStartPad = '\x01';
constexpr double kNegInf = -std::numeric_limits<double>::infinity();

}  // namespace

MarkovModel MarkovModel::Train(std::span<const std::string> passwords,
                               const MarkovConfig& config) {
  if (config.order < 1) throw InvalidArgument("markov order must be >= 1");
  if (passwords.empty()) throw InvalidArgument("markov: no training passwords");
  if (config.smoothing < 0) throw InvalidArgument("smoothing must be >= 0");
  MarkovModel m;
  m.config_ = config;
  if (config.alphabet.empty()) {
    std::set<char> seen;
    for (const auto& p : passwords) seen.insert(p.begin(), p.end());
    m.alphabet_.assign(seen.begin(), seen.end());
  } else {
    m.alphabet_ = config.alphabet;
  }
  m.class_of_.assign(256, -1);
  for (std::size_t i = 0; i < m.alphabet_.size(); ++i) {
    m.class_of_[static_cast<unsigned char>(m.alphabet_[i])] =
        static_cast<int>(i) + 1;
  }
  const int lowest = config.backoff ? 1 : config.order;
  m.tables_.resize(static_cast<std::size_t>(config.order));
  const std::size_t classes = m.alphabet_.size() + 1;
  for (const auto& p : passwords) {
    if (!m.InKeySpace(p)) continue;
    for (std::size_t t = 0; t <= p.size(); ++t) {
      const int cls = t < p.size() ? m.ClassOf(p[t]) : 0;
      const std::string_view history(p.data(), t);
      for (int o = lowest; o <= config.order; ++o) {
        Row& row = m.tables_[static_cast<std::size_t>(o - 1)][m.Context(history, o)];
        if (row.counts.empty()) row.counts.assign(classes, 0);
        ++row.counts[static_cast<std::size_t>(cls)];
        ++row.total;
      }
    }
  }
  return m;
}

int MarkovModel::ClassOf(char c) const {
  return class_of_[static_cast<unsigned char>(c)];
}

std::string MarkovModel::Context(std::string_view history, int order) const {
  const auto len = static_cast<std::size_t>(order - 1);
  std::string ctx(len, kStartPad);
  const std::size_t take = std::min(len, history.size());
  std::copy(history.end() - static_cast<std::ptrdiff_t>(take), history.end(),
            ctx.end() - static_cast<std::ptrdiff_t>(take));
  return ctx;
}

const MarkovModel::Row* MarkovModel::Find(std::string_view history,
                                          int order) const {
  const Table& table = tables_[static_cast<std::size_t>(order - 1)];
  auto it = table.find(Context(history, order));
  return it == table.end() ? nullptr : &it->second;
}

int MarkovModel::OrderUsed(std::string_view history) const {
  if (!config_.backoff) return config_.order;
  for (int o = config_.order; o > 1; --o) {
    const Row* row = Find(history, o);
    if (row != nullptr && row->total >= config_.backoff_threshold) return o;
  }
  return 1;
}

std::vector<double> MarkovModel::Distribution(std::string_view history) const {
  const std::size_t classes = alphabet_.size() + 1;
  std::vector<double> dist(classes, 0.0);
  if (history.size() >= config_.max_len) {
    dist[0] = 1.0;
    return dist;
  }
  const Row* row = Find(history, OrderUsed(history));
  const double lambda = config_.smoothing;
  const double total = (row ? static_cast<double>(row->total) : 0.0) +
                       lambda * static_cast<double>(classes);
  if (total == 0.0) return dist;
  for (std::size_t j = 0; j < classes; ++j) {
    const double count = row ? row->counts[j] : 0.0;
    dist[j] = (count + lambda) / total;
  }
  return dist;
}

double MarkovModel::ConditionalProb(std::string_view history, char next) const {
  const int cls = next == '\0' ? 0 : ClassOf(next);
  if (cls < 0) return 0.0;
  return Distribution(history)[static_cast<std::size_t>(cls)];
}

bool MarkovModel::InKeySpace(std::string_view password) const {
  if (password.size() > config_.max_len) return false;
  return std::all_of(password.begin(), password.end(),
                     [&](char c) { return ClassOf(c) > 0; });
}

double MarkovModel::LogProb(std::string_view password) const {
  if (!InKeySpace(password)) return kNegInf;
  double lp = 0.0;
  for (std::size_t t = 0; t <= password.size(); ++t) {
    const char next = t < password.size() ? password[t] : '\0';
    const double p = ConditionalProb(password.substr(0, t), next);
    if (p <= 0.0) return kNegInf;
    lp += std::log(p);
  }
  return lp;
}

std::vector<SampledPassword> MarkovModel::Sample(std::mt19937_64& rng,
                                                 std::size_t n) const {
  std::uniform_real_distribution<double> uniform(0.0, 1.0);
  std::vector<SampledPassword> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::string text;
    double lp = 0.0;
    while (true) {
      const std::vector<double> dist = Distribution(text);
      double u = uniform(rng);
      std::size_t choice = dist.size();
      for (std::size_t j = 0; j < dist.size(); ++j) {
        if (dist[j] <= 0.0) continue;
        choice = j;
        if (u < dist[j]) break;
        u -= dist[j];
      }
      if (choice == dist.size()) {
        throw InvalidArgument("markov: context with no probability mass");
      }
      lp += std::log(dist[choice]);
      if (choice == 0) break;
      text.push_back(alphabet_[choice - 1]);
    }
    out.push_back({text, lp, std::exp(lp)});
  }
  return out;
}

double MinAuto(std::span<const double> guess_numbers) {
  if (guess_numbers.empty()) throw InvalidArgument("min_auto: empty list");
  return *std::min_element(guess_numbers.begin(), guess_numbers.end());
}

}  // namespace uncm::markov
