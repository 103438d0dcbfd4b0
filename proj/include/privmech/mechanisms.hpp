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

// The three privacy-aware mechanisms, evaluated on explicit noise:
//
//   election:  output A iff #A - #B >= r, r two-sided geometric.
//   facility:  output the median location of the histogram plus one-sided
//              geometric noise per location.
//   VCG:       V_o = sum of reported utilities + lambda_o + o/|O|; output
//              the argmax o* together with the gaps V_{o*} - V_o of every
//              outcome within M of the winner. Each player's payment is a
//              function of its own row, o* and those gaps.
//
// VCG values are kept as integers scaled by |O| so the o/|O| tie-breaking
// term is exact.

#ifndef PRIVMECH_MECHANISMS_HPP_
#define PRIVMECH_MECHANISMS_HPP_

#include <algorithm>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/noise.hpp"
#include "privmech/rng.hpp"

namespace privmech {

// ---------------------------------------------------------------------------
// Election.

// #A - #B over the profile; abstentions count for neither side.
inline std::int64_t TallyDifference(std::span<const PlayerType> profile) {
  std::int64_t diff = 0;
  for (const PlayerType& t : profile) {
    if (IsAbstain(t)) continue;
    const auto* c = std::get_if<Candidate>(&t);
    if (c == nullptr) {
      throw std::domain_error("election profile holds a non-candidate type");
    }
    diff += *c == Candidate::kA ? 1 : -1;
  }
  return diff;
}

inline Candidate ElectionEvalTally(std::int64_t tally_difference,
                                   std::int64_t noise) {
  return tally_difference >= noise ? Candidate::kA : Candidate::kB;
}

inline Candidate ElectionEval(std::span<const PlayerType> profile,
                              std::int64_t noise) {
  return ElectionEvalTally(TallyDifference(profile), noise);
}

// ---------------------------------------------------------------------------
// Facility location.

inline LocationIndex FacilityEval(const Histogram& h,
                                  std::span<const std::int64_t> noise) {
  if (noise.size() != h.size()) {
    throw std::domain_error("noise length differs from the histogram length");
  }
  std::vector<std::int64_t> z(h.counts);
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (noise[j] < 0) throw std::domain_error("facility noise must be >= 0");
    z[j] += noise[j];
  }
  return LocationIndex{MedianIndex(z)};
}

// ---------------------------------------------------------------------------
// VCG.

class VcgInstance {
 public:
  VcgInstance(std::size_t num_outcomes, int max_utility)
      : num_outcomes_(num_outcomes), max_utility_(max_utility) {
    if (num_outcomes_ < 1) throw std::domain_error("need at least one outcome");
    if (max_utility_ < 1) throw std::domain_error("max utility must be >= 1");
  }

  std::size_t num_outcomes() const { return num_outcomes_; }
  int max_utility() const { return max_utility_; }
  std::int64_t scale() const { return static_cast<std::int64_t>(num_outcomes_); }

  // The utility row of a report; non-participation is the all-zero row.
  UtilityRow RowOf(const PlayerType& t) const {
    if (IsAbstain(t)) return UtilityRow::Zero(num_outcomes_, max_utility_);
    const auto* row = std::get_if<UtilityRow>(&t);
    if (row == nullptr) {
      throw std::domain_error("VCG profile holds a non-utility-row type");
    }
    CheckRow(*row);
    return *row;
  }

  void CheckRow(const UtilityRow& row) const {
    if (row.size() != num_outcomes_ || row.max_utility() != max_utility_) {
      throw std::domain_error("utility row does not match the instance");
    }
  }

  // Type space including the all-zero row.
  std::vector<UtilityRow> AllRows() const {
    return AllUtilityRows(num_outcomes_, max_utility_);
  }

  // Reported social welfare per outcome.
  std::vector<std::int64_t> Welfare(std::span<const PlayerType> profile) const {
    std::vector<std::int64_t> w(num_outcomes_, 0);
    for (const PlayerType& t : profile) {
      if (IsAbstain(t)) continue;
      const auto* row = std::get_if<UtilityRow>(&t);
      if (row == nullptr) {
        throw std::domain_error("VCG profile holds a non-utility-row type");
      }
      CheckRow(*row);
      for (std::size_t o = 0; o < num_outcomes_; ++o) w[o] += (*row)[o];
    }
    return w;
  }

 private:
  std::size_t num_outcomes_;
  int max_utility_;
};

// Released gaps V_{o*} - V_o, one per outcome o != o* with
// V_o >= V_{o*} - M. Gaps are stored multiplied by |O|; entries are sorted
// by outcome so equal releases compare equal.
class PaymentInfo {
 public:
  struct Entry {
    OutcomeIndex outcome;
    std::int64_t scaled_gap = 0;
    auto operator<=>(const Entry&) const = default;
  };

  PaymentInfo() = default;
  PaymentInfo(std::int64_t scale, std::vector<Entry> entries)
      : scale_(scale), entries_(std::move(entries)) {
    std::sort(entries_.begin(), entries_.end());
  }

  std::int64_t scale() const { return scale_; }
  const std::vector<Entry>& entries() const { return entries_; }
  bool empty() const { return entries_.empty(); }

  Rational Gap(const Entry& e) const { return Rational(e.scaled_gap, scale_); }

  std::optional<Rational> GapFor(OutcomeIndex o) const {
    for (const Entry& e : entries_) {
      if (e.outcome == o) return Gap(e);
    }
    return std::nullopt;
  }

  auto operator<=>(const PaymentInfo&) const = default;

 private:
  std::int64_t scale_ = 1;
  std::vector<Entry> entries_;
};

struct VcgOutput {
  OutcomeIndex winner;
  PaymentInfo info;
  auto operator<=>(const VcgOutput&) const = default;
};

inline std::string ToString(const VcgOutput& out) {
  std::string s = "o*=" + std::to_string(out.winner.value) + " pi={";
  bool first = true;
  for (const auto& e : out.info.entries()) {
    if (!first) s += ",";
    first = false;
    s += "(" + std::to_string(e.outcome.value) + "," +
         out.info.Gap(e).ToString() + ")";
  }
  return s + "}";
}

// |O| * V_o for every outcome.
inline std::vector<std::int64_t> ScaledValues(
    const VcgInstance& instance, std::span<const std::int64_t> welfare,
    std::span<const std::int64_t> noise) {
  const std::size_t n_out = instance.num_outcomes();
  if (welfare.size() != n_out || noise.size() != n_out) {
    throw std::domain_error("welfare/noise length differs from |O|");
  }
  std::vector<std::int64_t> v(n_out);
  for (std::size_t o = 0; o < n_out; ++o) {
    v[o] = instance.scale() * (welfare[o] + noise[o]) +
           static_cast<std::int64_t>(o);
  }
  return v;
}

// The scaled values are distinct modulo |O|, so the argmax is unique.
inline std::size_t ArgMax(std::span<const std::int64_t> scaled_values) {
  return static_cast<std::size_t>(
      std::max_element(scaled_values.begin(), scaled_values.end()) -
      scaled_values.begin());
}

inline std::size_t VcgWinnerFromWelfare(const VcgInstance& instance,
                                        std::span<const std::int64_t> welfare,
                                        std::span<const std::int64_t> noise) {
  const std::int64_t scale = instance.scale();
  std::size_t best = 0;
  std::int64_t best_value = scale * (welfare[0] + noise[0]);
  for (std::size_t o = 1; o < welfare.size(); ++o) {
    const std::int64_t v =
        scale * (welfare[o] + noise[o]) + static_cast<std::int64_t>(o);
    if (v > best_value) {
      best = o;
      best_value = v;
    }
  }
  return best;
}

inline VcgOutput VcgEvalFromWelfare(const VcgInstance& instance,
                                    std::span<const std::int64_t> welfare,
                                    std::span<const std::int64_t> noise) {
  const std::vector<std::int64_t> v = ScaledValues(instance, welfare, noise);
  const std::size_t winner = ArgMax(v);
  const std::int64_t window = instance.scale() * instance.max_utility();
  std::vector<PaymentInfo::Entry> entries;
  for (std::size_t o = 0; o < v.size(); ++o) {
    if (o == winner) continue;
    const std::int64_t gap = v[winner] - v[o];
    if (gap <= window) entries.push_back({OutcomeIndex{o}, gap});
  }
  return VcgOutput{OutcomeIndex{winner},
                   PaymentInfo(instance.scale(), std::move(entries))};
}

inline VcgOutput VcgEval(const VcgInstance& instance,
                         std::span<const PlayerType> profile,
                         std::span<const std::int64_t> noise) {
  const std::vector<std::int64_t> w = instance.Welfare(profile);
  return VcgEvalFromWelfare(instance, w, noise);
}

// |O| * P_i where P_i = max over o* and the released outcomes of
// (Uo(row, o*) - Uo(row, o)) - (V_{o*} - V_o). Uses nothing but the row and
// the public output.
inline std::int64_t VcgPaymentScaled(const UtilityRow& row,
                                     const VcgOutput& out) {
  const std::int64_t scale = out.info.scale();
  if (out.winner.value >= row.size() ||
      (scale != 1 && static_cast<std::size_t>(scale) != row.size())) {
    throw std::domain_error("utility row does not match the VCG output");
  }
  const std::int64_t u_star = row[out.winner.value];
  std::int64_t best = 0;
  for (const auto& e : out.info.entries()) {
    best = std::max(best, scale * (u_star - row[e.outcome.value]) - e.scaled_gap);
  }
  return best;
}

inline Rational VcgPayment(const UtilityRow& row, const VcgOutput& out) {
  return Rational(VcgPaymentScaled(row, out), out.info.scale());
}

// The payment computed from public information equals the externality form
// max_o W_o - W_{o*}, W_o = V_o - Uo(theta_i, o), with the noise acting as
// one more player.
inline bool VcgPaymentIdentityCheck(const VcgInstance& instance,
                                    std::span<const PlayerType> profile,
                                    std::span<const std::int64_t> noise,
                                    std::size_t player) {
  if (player >= profile.size()) throw std::domain_error("no such player");
  const UtilityRow row = instance.RowOf(profile[player]);
  const std::vector<std::int64_t> welfare = instance.Welfare(profile);
  const VcgOutput out = VcgEvalFromWelfare(instance, welfare, noise);
  std::vector<std::int64_t> v = ScaledValues(instance, welfare, noise);
  for (std::size_t o = 0; o < v.size(); ++o) v[o] -= instance.scale() * row[o];
  const std::int64_t externality =
      *std::max_element(v.begin(), v.end()) - v[out.winner.value];
  return externality == VcgPaymentScaled(row, out);
}

// Expected externality sum_{j != i} (Uo(theta_j, o_{-i}) - Uo(theta_j, o*))
// over a finite prior on profiles and the truncated noise window. o* is the
// mechanism's winner and o_{-i} the winner with player i removed, both with
// the same noise and tie-breaking. The slack covers the noise mass outside
// the window, at most (n - 1) M per unit of missing probability.
inline BoundedValue ExpectedExternalityPayment(
    const VcgInstance& instance,
    const std::vector<std::pair<TypeProfile, double>>& prior,
    std::size_t player, double epsilon, const TruncationWindow& window) {
  if (prior.empty()) throw std::domain_error("prior has empty support");
  double total = 0.0;
  for (const auto& [profile, p] : prior) {
    if (!(p >= 0.0)) throw std::domain_error("negative prior mass");
    if (player >= profile.size()) throw std::domain_error("no such player");
    total += p;
  }
  if (std::abs(total - 1.0) > 1e-9) {
    throw std::domain_error("prior masses must sum to 1");
  }
  if (window.coordinates != instance.num_outcomes()) {
    throw std::domain_error("window does not cover |O| coordinates");
  }
  const NoiseSpec spec =
      VcgNoise(epsilon, instance.max_utility(), instance.num_outcomes());
  const ShiftReducedNoise noise(spec, window);
  CompensatedSum sum;
  std::size_t max_players = 0;
  for (const auto& [profile, p] : prior) {
    if (p == 0.0) continue;
    max_players = std::max(max_players, profile.size());
    const std::vector<std::int64_t> welfare = instance.Welfare(profile);
    const UtilityRow row = instance.RowOf(profile[player]);
    std::vector<std::int64_t> others(welfare);
    for (std::size_t o = 0; o < others.size(); ++o) others[o] -= row[o];
    noise.ForEach([&](std::span<const std::int64_t> lambda, double weight) {
      const std::size_t o_star = VcgWinnerFromWelfare(instance, welfare, lambda);
      const std::size_t o_minus = VcgWinnerFromWelfare(instance, others, lambda);
      if (o_star == o_minus) return;
      sum.Add(p * weight *
              static_cast<double>(others[o_minus] - others[o_star]));
    });
  }
  const double bound = static_cast<double>(max_players > 0 ? max_players - 1 : 0) *
                       static_cast<double>(instance.max_utility());
  return BoundedValue{sum.Value(), window.tail_mass * bound};
}

// ---------------------------------------------------------------------------
// Sampled execution.

class ElectionMechanism {
 public:
  explicit ElectionMechanism(double epsilon)
      : epsilon_(epsilon), noise_(ElectionNoise(epsilon)) {}

  double epsilon() const { return epsilon_; }
  const NoiseSpec& noise() const { return noise_; }

  Candidate Run(std::span<const PlayerType> profile, RngStream& rng) const {
    const std::int64_t diff = TallyDifference(profile);
    return ElectionEvalTally(diff, Sample(noise_, rng));
  }

 private:
  double epsilon_;
  NoiseSpec noise_;
};

class FacilityMechanism {
 public:
  FacilityMechanism(LocationSet locations, double epsilon)
      : locations_(std::move(locations)),
        epsilon_(epsilon),
        noise_(FacilityNoise(epsilon)) {}

  const LocationSet& locations() const { return locations_; }
  std::size_t num_locations() const { return locations_.size(); }
  double epsilon() const { return epsilon_; }
  const NoiseSpec& noise() const { return noise_; }

  LocationIndex Run(std::span<const PlayerType> profile, RngStream& rng) const {
    const Histogram h = BuildHistogram(profile, locations_.size());
    std::vector<std::int64_t> r(locations_.size());
    for (auto& x : r) x = Sample(noise_, rng);
    return FacilityEval(h, r);
  }

 private:
  LocationSet locations_;
  double epsilon_;
  NoiseSpec noise_;
};

class VcgMechanism {
 public:
  VcgMechanism(VcgInstance instance, double epsilon)
      : instance_(instance),
        epsilon_(epsilon),
        noise_(VcgNoise(epsilon, instance.max_utility(),
                        instance.num_outcomes())) {}

  const VcgInstance& instance() const { return instance_; }
  double epsilon() const { return epsilon_; }
  const NoiseSpec& noise() const { return noise_; }

  VcgOutput Run(std::span<const PlayerType> profile, RngStream& rng) const {
    std::vector<std::int64_t> lambda(instance_.num_outcomes());
    for (auto& x : lambda) x = Sample(noise_, rng);
    return VcgEval(instance_, profile, lambda);
  }

 private:
  VcgInstance instance_;
  double epsilon_;
  NoiseSpec noise_;
};

}  // namespace privmech

#endif  // PRIVMECH_MECHANISMS_HPP_
