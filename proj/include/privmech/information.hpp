//
// Copyright 2026 The privmech Authors
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
//

// Mutual information and KL divergence of finite distributions, in nats.

#ifndef PRIVMECH_INFORMATION_HPP_
#define PRIVMECH_INFORMATION_HPP_

#include <cmath>
#include <cstddef>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/distributions.hpp"

namespace privmech {

// Joint law of (X, Y) on index pairs, with the mass missing to truncation.
class JointDistribution {
 public:
  JointDistribution() = default;
  explicit JointDistribution(double slack) : slack_(slack) {}

  void Add(std::size_t x, std::size_t y, double p) {
    if (p < 0.0) throw std::domain_error("negative joint mass");
    if (p > 0.0) probs_[{x, y}] += p;
  }

  // Joint of (T, M(s(T))) built from a prior on T and per-report output
  // distributions; `report[t]` indexes the distribution used for type t.
  template <typename Key>
  static JointDistribution FromChannel(
      std::span<const double> prior,
      std::span<const OutcomeDistribution<Key>> per_report,
      std::span<const std::size_t> report) {
    if (prior.size() != report.size()) {
      throw std::domain_error("strategy and prior differ in size");
    }
    std::map<Key, std::size_t> index;
    for (const auto& d : per_report) {
      for (const auto& [key, lp] : d.log_probs()) index.try_emplace(key, 0);
    }
    std::size_t next = 0;
    for (auto& [key, idx] : index) idx = next++;
    double slack = 0.0;
    JointDistribution joint;
    for (std::size_t t = 0; t < prior.size(); ++t) {
      const OutcomeDistribution<Key>& d = per_report[report[t]];
      slack += prior[t] * d.slack();
      for (const auto& [key, lp] : d.log_probs()) {
        joint.Add(t, index.at(key), prior[t] * std::exp(lp));
      }
    }
    joint.slack_ = slack;
    return joint;
  }

  const std::map<std::pair<std::size_t, std::size_t>, double>& probs() const {
    return probs_;
  }
  double slack() const { return slack_; }

  std::map<std::size_t, double> MarginalX() const {
    std::map<std::size_t, double> m;
    for (const auto& [xy, p] : probs_) m[xy.first] += p;
    return m;
  }
  std::map<std::size_t, double> MarginalY() const {
    std::map<std::size_t, double> m;
    for (const auto& [xy, p] : probs_) m[xy.second] += p;
    return m;
  }

  double TotalMass() const {
    CompensatedSum s;
    for (const auto& [xy, p] : probs_) s.Add(p);
    return s.Value();
  }

 private:
  std::map<std::pair<std::size_t, std::size_t>, double> probs_;
  double slack_ = 0.0;
};

// I(X;Y) = sum p(x,y) ln(p(x,y) / (p(x) p(y))). The joint is renormalized
// first, so truncated joints are treated as conditioned on the window.
inline double MutualInformation(const JointDistribution& joint) {
  const double total = joint.TotalMass();
  if (!(total > 0.0)) throw std::domain_error("joint has no mass");
  const auto px = joint.MarginalX();
  const auto py = joint.MarginalY();
  CompensatedSum s;
  for (const auto& [xy, p] : joint.probs()) {
    const double ratio =
        (p * total) / (px.at(xy.first) * py.at(xy.second));
    s.Add(p / total * std::log(ratio));
  }
  return s.Value();
}

// KL(p || q); +inf when p puts mass where q has none.
inline double KlDivergence(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::domain_error("support size mismatch");
  CompensatedSum s;
  for (std::size_t k = 0; k < p.size(); ++k) {
    if (p[k] < 0.0 || q[k] < 0.0) throw std::domain_error("negative mass");
    if (p[k] == 0.0) continue;
    if (q[k] == 0.0) return std::numeric_limits<double>::infinity();
    s.Add(p[k] * (std::log(p[k]) - std::log(q[k])));
  }
  return s.Value();
}

template <typename Key>
double KlDivergence(const OutcomeDistribution<Key>& p,
                    const OutcomeDistribution<Key>& q) {
  CompensatedSum s;
  for (const auto& [key, lp] : p.log_probs()) {
    const double lq = q.LogProb(key);
    if (lq == kNegInf) return std::numeric_limits<double>::infinity();
    s.Add(std::exp(lp) * (lp - lq));
  }
  return s.Value();
}

}  // namespace privmech

#endif  // PRIVMECH_INFORMATION_HPP_
