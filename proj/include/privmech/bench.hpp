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

// Monte Carlo welfare experiments. Trial t always draws from substream t of
// the seed, so results are bit-identical for equal (parameters, seed).

#ifndef PRIVMECH_BENCH_HPP_
#define PRIVMECH_BENCH_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/mechanisms.hpp"
#include "privmech/noise.hpp"
#include "privmech/rng.hpp"

namespace privmech {

inline constexpr double kZ99 = 2.5758293035489004;
inline constexpr std::size_t kMinBenchTrials = 1000;

struct TailPoint {
  double delta = 0.0;
  double empirical = 0.0;  // fraction of trials with loss >= delta
  double ci99 = 0.0;
  double bound = 0.0;
  // Closed-form reference where one exists: the exact tail for the
  // election, the union bound with the one-sided tail for the facility.
  double reference = std::numeric_limits<double>::quiet_NaN();
};

// One named assertion of a bench; holds iff measured <= limit.
struct BenchCheck {
  std::string name;
  double measured = 0.0;
  double limit = 0.0;
  bool holds = false;
};

struct BenchResult {
  std::string mechanism;
  std::size_t n = 0;
  std::size_t q = 0;
  std::size_t outcomes = 0;
  int max_utility = 0;
  double epsilon = 0.0;
  std::size_t trials = 0;
  std::uint64_t seed = 0;
  double mean_loss = 0.0;
  double sd_loss = 0.0;
  double ci99 = 0.0;
  double bound = 0.0;  // headline expectation bound
  std::vector<TailPoint> tail;
  std::map<std::string, double> references;
  std::vector<BenchCheck> checks;

  bool AllChecksHold() const {
    return std::all_of(checks.begin(), checks.end(),
                       [](const BenchCheck& c) { return c.holds; });
  }
};

namespace internal {

// Welford running mean and variance.
class RunningStats {
 public:
  void Add(double x) {
    ++count_;
    const double d = x - mean_;
    mean_ += d / static_cast<double>(count_);
    m2_ += d * (x - mean_);
  }
  double mean() const { return mean_; }
  double sd() const {
    return count_ > 1 ? std::sqrt(m2_ / static_cast<double>(count_ - 1)) : 0.0;
  }
  double StandardError() const {
    return count_ > 0 ? sd() / std::sqrt(static_cast<double>(count_)) : 0.0;
  }

 private:
  std::size_t count_ = 0;
  double mean_ = 0.0;
  double m2_ = 0.0;
};

inline void CheckTrials(std::size_t trials) {
  if (trials < kMinBenchTrials) {
    throw std::domain_error("benches need at least 1000 trials");
  }
}

inline BenchCheck Check(std::string name, double measured, double limit) {
  return BenchCheck{std::move(name), measured, limit, measured <= limit};
}

// Empirical tail Pr[loss >= delta] with a normal-approximation half-width.
inline TailPoint EmpiricalTail(const std::vector<double>& losses, double delta) {
  std::size_t hits = 0;
  for (double l : losses) hits += l >= delta - 1e-12 ? 1 : 0;
  const double t = static_cast<double>(losses.size());
  const double p = static_cast<double>(hits) / t;
  TailPoint pt;
  pt.delta = delta;
  pt.empirical = p;
  pt.ci99 = kZ99 * std::sqrt(std::max(p * (1.0 - p), 1.0 / t) / t);
  return pt;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Profile generators.

inline TypeProfile ElectionProfile(std::size_t votes_a, std::size_t votes_b) {
  TypeProfile p(votes_a, Candidate::kA);
  p.insert(p.end(), votes_b, Candidate::kB);
  return p;
}

// ceil(2n/3) votes for A, the rest for B.
inline TypeProfile SkewedElectionProfile(std::size_t n) {
  const std::size_t a = (2 * n + 2) / 3;
  return ElectionProfile(a, n - a);
}

inline TypeProfile UniformElectionProfile(std::size_t n, RngStream& rng) {
  TypeProfile p;
  for (std::size_t i = 0; i < n; ++i) {
    p.emplace_back(rng.NextBit() ? Candidate::kA : Candidate::kB);
  }
  return p;
}

// ceil(2n/3) players at the first location, the rest at the last.
inline TypeProfile SkewedFacilityProfile(std::size_t n, std::size_t q) {
  const std::size_t a = (2 * n + 2) / 3;
  TypeProfile p(a, LocationIndex{0});
  p.insert(p.end(), n - a, LocationIndex{q - 1});
  return p;
}

inline TypeProfile UniformFacilityProfile(std::size_t n, std::size_t q,
                                          RngStream& rng) {
  TypeProfile p;
  std::uniform_int_distribution<std::size_t> pick(0, q - 1);
  for (std::size_t i = 0; i < n; ++i) p.emplace_back(LocationIndex{pick(rng)});
  return p;
}

// ceil(2n/3) players valuing only outcome 0 at M, the rest only outcome 1.
inline TypeProfile SkewedVcgProfile(const VcgInstance& instance, std::size_t n) {
  if (instance.num_outcomes() < 2) throw std::domain_error("need two outcomes");
  std::vector<int> first(instance.num_outcomes(), 0);
  std::vector<int> second(instance.num_outcomes(), 0);
  first[0] = instance.max_utility();
  second[1] = instance.max_utility();
  const std::size_t a = (2 * n + 2) / 3;
  TypeProfile p(a, UtilityRow(first, instance.max_utility()));
  p.insert(p.end(), n - a, UtilityRow(second, instance.max_utility()));
  return p;
}

// ---------------------------------------------------------------------------
// Benches.

// Loss is (optimal number of satisfied voters) - (realized number), i.e.
// |#A - #B| when the minority candidate wins and 0 otherwise.
inline BenchResult ElectionWelfareBench(std::span<const PlayerType> profile,
                                        double epsilon, std::size_t trials,
                                        std::uint64_t seed) {
  internal::CheckTrials(trials);
  const ElectionMechanism mech(epsilon);
  const NoiseSpec& spec = mech.noise();
  const std::int64_t diff = TallyDifference(profile);
  const std::int64_t margin = diff < 0 ? -diff : diff;
  const double alpha = spec.alpha();

  const RngStream root(seed);
  internal::RunningStats stats;
  std::vector<double> losses(trials);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng = root.Substream(t);
    const Candidate out = ElectionEvalTally(diff, Sample(spec, rng));
    const bool wrong = diff > 0 ? out == Candidate::kB
                       : diff < 0 ? out == Candidate::kA
                                  : false;
    losses[t] = wrong ? static_cast<double>(margin) : 0.0;
    stats.Add(losses[t]);
  }

  // Minority wins with probability Pr[B] = Pr[r > diff] for an A majority
  // and Pr[A] = Pr[r <= diff] for a B majority.
  const double p_wrong = diff > 0 ? Survival(spec, diff)
                         : diff < 0 ? Cdf(spec, diff)
                                    : 0.0;
  const double exact = static_cast<double>(margin) * p_wrong;
  const double paper_form = static_cast<double>(margin) *
                            std::pow(alpha, static_cast<double>(margin)) /
                            (1.0 + alpha);

  BenchResult r;
  r.mechanism = "election";
  r.n = profile.size();
  r.epsilon = epsilon;
  r.trials = trials;
  r.seed = seed;
  r.mean_loss = stats.mean();
  r.sd_loss = stats.sd();
  r.ci99 = kZ99 * stats.StandardError();
  r.bound = 1.0 / epsilon;
  r.references = {{"tally_margin", static_cast<double>(margin)},
                  {"exact_loss", exact},
                  {"paper_closed_form", paper_form},
                  {"p_minority_wins", p_wrong}};
  for (std::int64_t d = 0; d <= std::max<std::int64_t>(margin, 1); ++d) {
    TailPoint pt = internal::EmpiricalTail(losses, static_cast<double>(d));
    pt.bound = std::exp(-epsilon * static_cast<double>(d));
    pt.reference = d == 0 ? 1.0 : (margin >= d ? p_wrong : 0.0);
    r.tail.push_back(pt);
  }
  r.checks.push_back(internal::Check("exact loss < 1/eps", exact,
                                     std::nextafter(1.0 / epsilon, 0.0)));
  r.checks.push_back(internal::Check("exact loss <= paper closed form", exact,
                                     paper_form * (1.0 + 1e-12)));
  for (const TailPoint& pt : r.tail) {
    if (pt.delta < 1.0) continue;
    r.checks.push_back(internal::Check(
        "exact tail < e^{-eps delta} at " + std::to_string(pt.delta), pt.reference,
        std::nextafter(pt.bound, 0.0)));
  }
  // Standard error of the exact loss law, which stays positive when every
  // trial happens to have zero loss.
  const double se = static_cast<double>(margin) *
                    std::sqrt(p_wrong * (1.0 - p_wrong) / static_cast<double>(trials));
  r.checks.push_back(internal::Check("|MC mean - exact| <= 4 SE",
                                     std::abs(stats.mean() - exact),
                                     se > 0.0 ? 4.0 * se : 1e-12));
  return r;
}

// Loss is sum_i |l_i - o| - min_o' sum_i |l_i - o'|. Also records the noise
// total sum_j r_j, which bounds the loss.
inline BenchResult FacilityWelfareBench(const LocationSet& locations,
                                        std::span<const PlayerType> profile,
                                        double epsilon, std::size_t trials,
                                        std::uint64_t seed) {
  internal::CheckTrials(trials);
  const FacilityMechanism mech(locations, epsilon);
  const NoiseSpec& spec = mech.noise();
  const std::size_t q = locations.size();
  const Histogram h = BuildHistogram(profile, q);
  std::vector<double> cost(q, 0.0);
  for (std::size_t o = 0; o < q; ++o) {
    for (std::size_t j = 0; j < q; ++j) {
      cost[o] += static_cast<double>(h.counts[j]) * std::abs(locations[j] - locations[o]);
    }
  }
  const double optimum = *std::min_element(cost.begin(), cost.end());

  const RngStream root(seed);
  internal::RunningStats loss_stats;
  internal::RunningStats noise_stats;
  std::vector<double> losses(trials);
  std::vector<std::int64_t> r(q);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng = root.Substream(t);
    std::int64_t total = 0;
    for (auto& x : r) {
      x = Sample(spec, rng);
      total += x;
    }
    const LocationIndex o = FacilityEval(h, r);
    losses[t] = std::max(0.0, cost[o.value] - optimum);
    loss_stats.Add(losses[t]);
    noise_stats.Add(static_cast<double>(total));
  }

  const double alpha = spec.alpha();
  const double qd = static_cast<double>(q);
  const double paper_noise_mean = qd / (1.0 - alpha);
  const double exact_noise_mean = qd * alpha / (1.0 - alpha);

  BenchResult res;
  res.mechanism = "facility";
  res.n = profile.size();
  res.q = q;
  res.epsilon = epsilon;
  res.trials = trials;
  res.seed = seed;
  res.mean_loss = loss_stats.mean();
  res.sd_loss = loss_stats.sd();
  res.ci99 = kZ99 * loss_stats.StandardError();
  res.bound = paper_noise_mean;
  res.references = {{"noise_sum_mean", noise_stats.mean()},
                    {"noise_sum_se", noise_stats.StandardError()},
                    {"paper_noise_sum_mean", paper_noise_mean},
                    {"exact_noise_sum_mean", exact_noise_mean},
                    {"optimal_cost", optimum}};
  const auto max_delta = static_cast<std::int64_t>(std::ceil(static_cast<double>(res.n)));
  for (std::int64_t d = 0; d <= std::max<std::int64_t>(max_delta, 1); ++d) {
    TailPoint pt = internal::EmpiricalTail(losses, static_cast<double>(d));
    pt.bound = qd * std::exp(-epsilon * static_cast<double>(d) / qd);
    // Union bound with the one-sided tail Pr[r_j >= x] = alpha^ceil(x).
    pt.reference = std::min(1.0, qd * std::pow(alpha, std::ceil(static_cast<double>(d) / qd)));
    res.tail.push_back(pt);
    if (d >= 1 && pt.empirical == 0.0) break;  // zero from here on
  }
  res.checks.push_back(internal::Check("MC mean loss <= q/(1-e^{-eps/2}) + CI",
                                       loss_stats.mean(),
                                       paper_noise_mean + res.ci99));
  res.checks.push_back(internal::Check(
      "|mean sum r_j - q/(1-e^{-eps/2})| <= 4 SE",
      std::abs(noise_stats.mean() - paper_noise_mean),
      4.0 * noise_stats.StandardError()));
  for (const TailPoint& pt : res.tail) {
    res.checks.push_back(internal::Check(
        "tail <= q e^{-eps delta/q} + CI at " + std::to_string(pt.delta),
        pt.empirical, pt.bound + pt.ci99));
  }
  return res;
}

// Loss is max_o W_o - W_{o*} for the true welfare W.
inline BenchResult VcgWelfareBench(const VcgInstance& instance,
                                   std::span<const PlayerType> profile,
                                   double epsilon, std::size_t trials,
                                   std::uint64_t seed) {
  internal::CheckTrials(trials);
  const VcgMechanism mech(instance, epsilon);
  const NoiseSpec& spec = mech.noise();
  const std::vector<std::int64_t> welfare = instance.Welfare(profile);
  const std::int64_t best = *std::max_element(welfare.begin(), welfare.end());
  const std::size_t n_out = instance.num_outcomes();

  const RngStream root(seed);
  internal::RunningStats stats;
  std::vector<double> losses(trials);
  std::vector<std::int64_t> lambda(n_out);
  for (std::size_t t = 0; t < trials; ++t) {
    RngStream rng = root.Substream(t);
    for (auto& x : lambda) x = Sample(spec, rng);
    const std::size_t o = VcgWinnerFromWelfare(instance, welfare, lambda);
    losses[t] = static_cast<double>(best - welfare[o]);
    stats.Add(losses[t]);
  }

  const double alpha = spec.alpha();
  const double od = static_cast<double>(n_out);
  const double m = static_cast<double>(instance.max_utility());
  const double mean_abs = 2.0 * alpha / (1.0 - alpha * alpha);
  const double mean_bound = od * (od * mean_abs) + 1.0;

  BenchResult r;
  r.mechanism = "vcg";
  r.n = profile.size();
  r.outcomes = n_out;
  r.max_utility = instance.max_utility();
  r.epsilon = epsilon;
  r.trials = trials;
  r.seed = seed;
  r.mean_loss = stats.mean();
  r.sd_loss = stats.sd();
  r.ci99 = kZ99 * stats.StandardError();
  r.bound = mean_bound;
  r.references = {{"mean_abs_noise", mean_abs}, {"optimal_welfare", static_cast<double>(best)}};
  const std::int64_t max_loss = static_cast<std::int64_t>(profile.size()) *
                                instance.max_utility();
  for (std::int64_t d = 0; d <= std::max<std::int64_t>(max_loss, 1); ++d) {
    TailPoint pt = internal::EmpiricalTail(losses, static_cast<double>(d));
    pt.bound = 2.0 * od * std::exp(-epsilon * static_cast<double>(d) / (2.0 * m * od));
    r.tail.push_back(pt);
    if (d >= 1 && pt.empirical == 0.0) break;  // zero from here on
  }
  r.checks.push_back(internal::Check("MC mean loss <= |O| E[sum |lambda|] + 1",
                                     stats.mean(), mean_bound + r.ci99));
  for (const TailPoint& pt : r.tail) {
    r.checks.push_back(internal::Check(
        "tail <= 2|O| e^{-eps delta/(2M|O|)} + CI at " + std::to_string(pt.delta),
        pt.empirical, pt.bound + pt.ci99));
  }
  return r;
}

// ---------------------------------------------------------------------------
// Scaling.

enum class Mechanism { kElection, kFacility, kVcg };

inline const char* ToString(Mechanism m) {
  switch (m) {
    case Mechanism::kElection:
      return "election";
    case Mechanism::kFacility:
      return "facility";
    case Mechanism::kVcg:
      return "vcg";
  }
  return "election";
}

enum class EpsilonSchedule { kConstant, kInverseSqrt };

struct SweepResult {
  std::vector<BenchResult> rows;
  std::vector<double> loss_fraction;  // mean loss / n per row
  double slope = 0.0;                 // least squares of loss/n on log10 n
  bool trend_ok = false;
};

// Skewed (2/3 vs 1/3) profiles for each n in the grid; eps(n) is eps0 or
// eps0 / sqrt(n). Trial seeds differ per row but derive from `seed`.
inline SweepResult WelfareScalingSweep(Mechanism family,
                                       std::span<const std::size_t> n_grid,
                                       double eps0, EpsilonSchedule schedule,
                                       std::size_t trials, std::uint64_t seed,
                                       std::size_t q = 3,
                                       std::size_t num_outcomes = 2,
                                       int max_utility = 1) {
  if (n_grid.empty()) throw std::domain_error("empty n grid");
  SweepResult out;
  const RngStream root(seed);
  for (std::size_t k = 0; k < n_grid.size(); ++k) {
    const std::size_t n = n_grid[k];
    if (n < 1) throw std::domain_error("n must be >= 1");
    const double eps = schedule == EpsilonSchedule::kConstant
                           ? eps0
                           : eps0 / std::sqrt(static_cast<double>(n));
    const std::uint64_t row_seed = root.Substream(k)();
    BenchResult row;
    switch (family) {
      case Mechanism::kElection: {
        const TypeProfile p = SkewedElectionProfile(n);
        row = ElectionWelfareBench(p, eps, trials, row_seed);
        break;
      }
      case Mechanism::kFacility: {
        const LocationSet locations = LocationSet::Uniform(q);
        const TypeProfile p = SkewedFacilityProfile(n, q);
        row = FacilityWelfareBench(locations, p, eps, trials, row_seed);
        break;
      }
      case Mechanism::kVcg: {
        const VcgInstance instance(num_outcomes, max_utility);
        const TypeProfile p = SkewedVcgProfile(instance, n);
        row = VcgWelfareBench(instance, p, eps, trials, row_seed);
        break;
      }
    }
    out.loss_fraction.push_back(row.mean_loss / static_cast<double>(n));
    out.rows.push_back(std::move(row));
  }
  if (n_grid.size() >= 2) {
    double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
    const double cnt = static_cast<double>(n_grid.size());
    for (std::size_t k = 0; k < n_grid.size(); ++k) {
      const double x = std::log10(static_cast<double>(n_grid[k]));
      const double y = out.loss_fraction[k];
      sx += x;
      sy += y;
      sxx += x * x;
      sxy += x * y;
    }
    const double denom = cnt * sxx - sx * sx;
    out.slope = denom != 0.0 ? (cnt * sxy - sx * sy) / denom : 0.0;
  }
  out.trend_ok = out.slope <= 0.0;
  return out;
}

}  // namespace privmech

#endif  // PRIVMECH_BENCH_HPP_
