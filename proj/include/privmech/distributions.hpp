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

#ifndef PRIVMECH_DISTRIBUTIONS_HPP_
#define PRIVMECH_DISTRIBUTIONS_HPP_

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <span>
#include <stdexcept>
#include <utility>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/mechanisms.hpp"
#include "privmech/noise.hpp"

namespace privmech {

inline constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Output distribution of a mechanism on one input. Probabilities are kept in
// log space. `slack` bounds the mass missing because the noise was
// truncated; the stored masses sum to something in [1 - slack, 1].
template <typename Key>
class OutcomeDistribution {
 public:
  OutcomeDistribution() = default;
  explicit OutcomeDistribution(double slack) : slack_(slack) {
    if (!(slack >= 0.0)) throw std::domain_error("slack must be >= 0");
  }

  void AddLog(const Key& key, double log_p) {
    auto [it, inserted] = log_probs_.try_emplace(key, log_p);
    if (!inserted) it->second = LogAddExp(it->second, log_p);
  }
  void Add(const Key& key, double p) {
    if (p > 0.0) AddLog(key, std::log(p));
  }

  double LogProb(const Key& key) const {
    auto it = log_probs_.find(key);
    return it == log_probs_.end() ? kNegInf : it->second;
  }
  double Prob(const Key& key) const { return std::exp(LogProb(key)); }

  double slack() const { return slack_; }
  const std::map<Key, double>& log_probs() const { return log_probs_; }
  std::size_t size() const { return log_probs_.size(); }

  double TotalMass() const {
    CompensatedSum sum;
    for (const auto& [key, lp] : log_probs_) sum.Add(std::exp(lp));
    return sum.Value();
  }

  std::vector<Key> Support() const {
    std::vector<Key> keys;
    keys.reserve(log_probs_.size());
    for (const auto& [key, lp] : log_probs_) keys.push_back(key);
    return keys;
  }

 private:
  std::map<Key, double> log_probs_;
  double slack_ = 0.0;
};

// ---------------------------------------------------------------------------
// Election: closed form, no truncation.

inline OutcomeDistribution<Candidate> ElectionOutcomeDistFromTally(
    std::int64_t tally_difference, double epsilon) {
  const NoiseSpec spec = ElectionNoise(epsilon);
  OutcomeDistribution<Candidate> d(0.0);
  d.AddLog(Candidate::kA, LogCdf(spec, tally_difference));
  d.AddLog(Candidate::kB, LogSurvival(spec, tally_difference));
  return d;
}

inline OutcomeDistribution<Candidate> ElectionOutcomeDist(
    std::span<const PlayerType> profile, double epsilon) {
  return ElectionOutcomeDistFromTally(TallyDifference(profile), epsilon);
}

// ---------------------------------------------------------------------------
// Facility.

enum class FacilityMethod { kAuto, kProduct, kGrouped };

namespace internal {

// Distribution of the sum of `count` noise draws, each truncated to [0, K].
inline std::vector<double> TruncatedNoiseSum(const NoiseSpec& spec,
                                             std::int64_t bound,
                                             std::size_t count) {
  std::vector<double> single(static_cast<std::size_t>(bound + 1));
  for (std::int64_t k = 0; k <= bound; ++k) {
    single[static_cast<std::size_t>(k)] = Pmf(spec, k);
  }
  std::vector<double> acc{1.0};
  for (std::size_t c = 0; c < count; ++c) {
    std::vector<double> next(acc.size() + single.size() - 1, 0.0);
    for (std::size_t a = 0; a < acc.size(); ++a) {
      for (std::size_t b = 0; b < single.size(); ++b) {
        next[a + b] += acc[a] * single[b];
      }
    }
    acc = std::move(next);
  }
  return acc;
}

inline OutcomeDistribution<LocationIndex> FacilityByProduct(
    const Histogram& h, const NoiseSpec& spec, const TruncationWindow& window) {
  std::vector<CompensatedSum> mass(h.size());
  std::vector<std::int64_t> z(h.size());
  ForEachNoiseVector(spec, window,
                     [&](std::span<const std::int64_t> r, double p) {
                       for (std::size_t j = 0; j < z.size(); ++j) {
                         z[j] = h.counts[j] + r[j];
                       }
                       mass[MedianIndex(z)].Add(p);
                     });
  OutcomeDistribution<LocationIndex> d(window.tail_mass);
  for (std::size_t j = 0; j < mass.size(); ++j) {
    d.Add(LocationIndex{j}, mass[j].Value());
  }
  return d;
}

// Location j wins iff L + x >= R and (j == 0 or L < x + R), where L and R
// are the perturbed counts left and right of j and x = h_j + r_j. L and R
// are sums of independent truncated draws, so three nested sums suffice.
inline OutcomeDistribution<LocationIndex> FacilityByGroups(
    const Histogram& h, const NoiseSpec& spec, const TruncationWindow& window) {
  const std::size_t q = h.size();
  const std::int64_t bound = window.bound;
  CheckEnumerationBudget(std::pow(static_cast<double>(q * bound + 1), 3.0),
                         "facility grouped enumeration");
  std::vector<std::vector<double>> sums(q);
  for (std::size_t m = 0; m < q; ++m) sums[m] = TruncatedNoiseSum(spec, bound, m);
  std::vector<double> single = sums.size() > 1 ? sums[1]
                                               : TruncatedNoiseSum(spec, bound, 1);
  OutcomeDistribution<LocationIndex> d(window.tail_mass);
  for (std::size_t j = 0; j < q; ++j) {
    std::int64_t h_left = 0;
    std::int64_t h_right = 0;
    for (std::size_t k = 0; k < j; ++k) h_left += h.counts[k];
    for (std::size_t k = j + 1; k < q; ++k) h_right += h.counts[k];
    const std::vector<double>& left = sums[j];
    const std::vector<double>& right = sums[q - j - 1];
    const auto right_size = static_cast<std::int64_t>(right.size());
    CompensatedSum total;
    for (std::size_t sl = 0; sl < left.size(); ++sl) {
      const std::int64_t l = h_left + static_cast<std::int64_t>(sl);
      for (std::size_t r = 0; r < single.size(); ++r) {
        const std::int64_t x = h.counts[j] + static_cast<std::int64_t>(r);
        // R = h_right + sr must satisfy R <= l + x and (j == 0 or R > l - x).
        std::int64_t lo = j == 0 ? 0 : l - x + 1 - h_right;
        std::int64_t hi = l + x - h_right;
        lo = std::max<std::int64_t>(lo, 0);
        hi = std::min<std::int64_t>(hi, right_size - 1);
        if (lo > hi) continue;
        CompensatedSum inner;
        for (std::int64_t sr = lo; sr <= hi; ++sr) {
          inner.Add(right[static_cast<std::size_t>(sr)]);
        }
        total.Add(left[sl] * single[r] * inner.Value());
      }
    }
    d.Add(LocationIndex{j}, total.Value());
  }
  return d;
}

}  // namespace internal

inline OutcomeDistribution<LocationIndex> FacilityOutcomeDist(
    const Histogram& h, double epsilon, const TruncationWindow& window,
    FacilityMethod method = FacilityMethod::kAuto) {
  if (h.size() < 1) throw std::domain_error("histogram has no locations");
  if (window.coordinates != h.size()) {
    throw std::domain_error("window does not cover q coordinates");
  }
  const NoiseSpec spec = FacilityNoise(epsilon);
  if (method == FacilityMethod::kAuto) {
    const double product_points =
        std::pow(static_cast<double>(window.bound + 1),
                 static_cast<double>(h.size()));
    method = product_points <= 65536.0 ? FacilityMethod::kProduct
                                       : FacilityMethod::kGrouped;
  }
  if (method == FacilityMethod::kProduct) {
    return internal::FacilityByProduct(h, spec, window);
  }
  return internal::FacilityByGroups(h, spec, window);
}

// ---------------------------------------------------------------------------
// VCG.

// Packs a VCG output into one integer: the winner plus, for every other
// outcome, either "not released" or its scaled gap in [1, M|O|].
class VcgOutputCodec {
 public:
  static constexpr std::size_t kMaxOutcomes = 12;

  explicit VcgOutputCodec(const VcgInstance& instance)
      : num_outcomes_(instance.num_outcomes()),
        scale_(instance.scale()),
        window_(instance.scale() * instance.max_utility()) {
    if (num_outcomes_ > kMaxOutcomes) {
      throw ResourceError("too many outcomes for exact VCG enumeration");
    }
    const double codes =
        static_cast<double>(num_outcomes_) *
        std::pow(static_cast<double>(window_ + 1),
                 static_cast<double>(num_outcomes_ - 1));
    if (codes > 1e8) throw ResourceError("VCG output space too large");
    num_codes_ = static_cast<std::uint32_t>(codes);
  }

  std::uint32_t num_codes() const { return num_codes_; }

  // Output code for reported welfare plus noise.
  std::uint32_t Code(std::span<const std::int64_t> welfare,
                     std::span<const std::int64_t> noise) const {
    std::array<std::int64_t, kMaxOutcomes> v{};
    std::size_t winner = 0;
    for (std::size_t o = 0; o < num_outcomes_; ++o) {
      v[o] = scale_ * (welfare[o] + noise[o]) + static_cast<std::int64_t>(o);
      if (v[o] > v[winner]) winner = o;
    }
    std::uint32_t code = 0;
    for (std::size_t o = 0; o < num_outcomes_; ++o) {
      if (o == winner) continue;
      const std::int64_t gap = v[winner] - v[o];
      code = code * static_cast<std::uint32_t>(window_ + 1) +
             static_cast<std::uint32_t>(gap <= window_ ? gap : 0);
    }
    return code * static_cast<std::uint32_t>(num_outcomes_) +
           static_cast<std::uint32_t>(winner);
  }

  static std::size_t WinnerOf(std::uint32_t code, std::size_t num_outcomes) {
    return code % num_outcomes;
  }
  std::size_t Winner(std::uint32_t code) const {
    return code % num_outcomes_;
  }

  VcgOutput Decode(std::uint32_t code) const {
    const std::size_t winner = code % num_outcomes_;
    code /= static_cast<std::uint32_t>(num_outcomes_);
    std::vector<PaymentInfo::Entry> entries;
    for (std::size_t pos = num_outcomes_; pos-- > 0;) {
      if (pos == winner) continue;
      const std::uint32_t digit = code % static_cast<std::uint32_t>(window_ + 1);
      code /= static_cast<std::uint32_t>(window_ + 1);
      if (digit != 0) entries.push_back({OutcomeIndex{pos}, digit});
    }
    return VcgOutput{OutcomeIndex{winner}, PaymentInfo(scale_, std::move(entries))};
  }

 private:
  std::size_t num_outcomes_;
  std::int64_t scale_;
  std::int64_t window_;
  std::uint32_t num_codes_ = 0;
};

// The positive-weight points of a shift-reduced VCG noise window, stored
// flat for repeated passes.
class VcgNoiseGrid {
 public:
  VcgNoiseGrid(const VcgInstance& instance, double epsilon,
               const TruncationWindow& window)
      : num_outcomes_(instance.num_outcomes()), window_(window) {
    if (window.coordinates != num_outcomes_) {
      throw std::domain_error("window does not cover |O| coordinates");
    }
    const NoiseSpec spec =
        VcgNoise(epsilon, instance.max_utility(), instance.num_outcomes());
    ShiftReducedNoise reduced(spec, window);
    reduced.ForEach([&](std::span<const std::int64_t> noise, double weight) {
      points_.insert(points_.end(), noise.begin(), noise.end());
      weights_.push_back(weight);
    });
  }

  std::size_t size() const { return weights_.size(); }
  std::span<const std::int64_t> Point(std::size_t k) const {
    return {points_.data() + k * num_outcomes_, num_outcomes_};
  }
  double Weight(std::size_t k) const { return weights_[k]; }
  const TruncationWindow& window() const { return window_; }

  // Output code of every grid point for one welfare vector.
  std::vector<std::uint32_t> Codes(const VcgOutputCodec& codec,
                                   std::span<const std::int64_t> welfare) const {
    std::vector<std::uint32_t> codes(size());
    for (std::size_t k = 0; k < size(); ++k) codes[k] = codec.Code(welfare, Point(k));
    return codes;
  }

  // Output mass per code for one welfare vector.
  std::vector<double> CodeMasses(const VcgOutputCodec& codec,
                                 std::span<const std::int64_t> welfare) const {
    std::vector<CompensatedSum> acc(codec.num_codes());
    for (std::size_t k = 0; k < size(); ++k) {
      acc[codec.Code(welfare, Point(k))].Add(weights_[k]);
    }
    std::vector<double> mass(acc.size());
    for (std::size_t c = 0; c < acc.size(); ++c) mass[c] = acc[c].Value();
    return mass;
  }

 private:
  std::size_t num_outcomes_;
  TruncationWindow window_;
  std::vector<std::int64_t> points_;
  std::vector<double> weights_;
};

inline OutcomeDistribution<VcgOutput> VcgOutputDistFromWelfare(
    const VcgInstance& instance, std::span<const std::int64_t> welfare,
    const VcgNoiseGrid& grid) {
  const VcgOutputCodec codec(instance);
  const std::vector<double> mass = grid.CodeMasses(codec, welfare);
  OutcomeDistribution<VcgOutput> d(grid.window().tail_mass);
  for (std::uint32_t c = 0; c < mass.size(); ++c) {
    if (mass[c] > 0.0) d.Add(codec.Decode(c), mass[c]);
  }
  return d;
}

inline OutcomeDistribution<OutcomeIndex> VcgWinnerDistFromWelfare(
    const VcgInstance& instance, std::span<const std::int64_t> welfare,
    const VcgNoiseGrid& grid) {
  std::vector<CompensatedSum> acc(instance.num_outcomes());
  for (std::size_t k = 0; k < grid.size(); ++k) {
    acc[VcgWinnerFromWelfare(instance, welfare, grid.Point(k))].Add(grid.Weight(k));
  }
  OutcomeDistribution<OutcomeIndex> d(grid.window().tail_mass);
  for (std::size_t o = 0; o < acc.size(); ++o) d.Add(OutcomeIndex{o}, acc[o].Value());
  return d;
}

// Distribution of the full output (o*, pi).
inline OutcomeDistribution<VcgOutput> VcgOutputDist(
    const VcgInstance& instance, std::span<const PlayerType> profile,
    double epsilon, const TruncationWindow& window) {
  const VcgNoiseGrid grid(instance, epsilon, window);
  return VcgOutputDistFromWelfare(instance, instance.Welfare(profile), grid);
}

// Distribution of the winner o* alone.
inline OutcomeDistribution<OutcomeIndex> VcgWinnerDist(
    const VcgInstance& instance, std::span<const PlayerType> profile,
    double epsilon, const TruncationWindow& window) {
  const VcgNoiseGrid grid(instance, epsilon, window);
  return VcgWinnerDistFromWelfare(instance, instance.Welfare(profile), grid);
}

// ---------------------------------------------------------------------------
// Comparisons.

// Total variation distance, widened by half the combined missing mass.
template <typename Key>
BoundedValue StatisticalDifference(const OutcomeDistribution<Key>& a,
                                   const OutcomeDistribution<Key>& b) {
  CompensatedSum sum;
  auto ia = a.log_probs().begin();
  auto ib = b.log_probs().begin();
  const auto ea = a.log_probs().end();
  const auto eb = b.log_probs().end();
  while (ia != ea || ib != eb) {
    if (ib == eb || (ia != ea && ia->first < ib->first)) {
      sum.Add(std::exp(ia->second));
      ++ia;
    } else if (ia == ea || ib->first < ia->first) {
      sum.Add(std::exp(ib->second));
      ++ib;
    } else {
      sum.Add(std::abs(std::exp(ia->second) - std::exp(ib->second)));
      ++ia;
      ++ib;
    }
  }
  return BoundedValue{0.5 * sum.Value(), 0.5 * (a.slack() + b.slack())};
}

// Same, for dense mass vectors over a shared index set.
inline BoundedValue StatisticalDifference(std::span<const double> a,
                                          std::span<const double> b,
                                          double slack_a, double slack_b) {
  if (a.size() != b.size()) throw std::domain_error("support size mismatch");
  CompensatedSum sum;
  for (std::size_t k = 0; k < a.size(); ++k) sum.Add(std::abs(a[k] - b[k]));
  return BoundedValue{0.5 * sum.Value(), 0.5 * (slack_a + slack_b)};
}

// Posterior over player i's type after observing `observed`, given the
// output distribution for each candidate type (others' reports held fixed).
template <typename Key>
std::vector<double> BayesPosterior(
    std::span<const double> prior, const Key& observed,
    std::span<const OutcomeDistribution<Key>> per_type) {
  if (prior.size() != per_type.size()) {
    throw std::domain_error("prior and per-type distributions differ in size");
  }
  std::vector<double> joint(prior.size());
  CompensatedSum evidence;
  for (std::size_t t = 0; t < prior.size(); ++t) {
    if (prior[t] < 0.0) throw std::domain_error("negative prior mass");
    joint[t] = prior[t] * per_type[t].Prob(observed);
    evidence.Add(joint[t]);
  }
  const double z = evidence.Value();
  if (!(z > 0.0)) throw std::domain_error("observed outcome has zero evidence");
  for (double& p : joint) p /= z;
  return joint;
}

}  // namespace privmech

#endif  // PRIVMECH_DISTRIBUTIONS_HPP_
