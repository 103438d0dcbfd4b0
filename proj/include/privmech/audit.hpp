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

// Exhaustive checks of privacy, truthfulness and rationality claims on small
// instances.
//
// Every audit enumerates player i's true report, a deviation, and every
// profile of the other players' reports (abstentions included, so smaller
// populations are covered too). The mechanisms are anonymous, so the other
// players are grouped by the statistic the mechanism actually reads (tally,
// histogram or welfare vector) and player i always sits at index 0 of the
// witness profile. Distributions are cached per statistic.
//
// Verdicts count truncation slack against the claim: a check passes only if
// it would pass however the missing mass were placed, fails only if it would
// fail however it were placed, and is inconclusive otherwise.

#ifndef PRIVMECH_AUDIT_HPP_
#define PRIVMECH_AUDIT_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>
#include <memory>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/distributions.hpp"
#include "privmech/information.hpp"
#include "privmech/mechanisms.hpp"
#include "privmech/noise.hpp"

namespace privmech {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

enum class NeighborModel { kSubstitution, kAddRemove };

inline const char* ToString(NeighborModel m) {
  return m == NeighborModel::kSubstitution ? "substitution" : "add-remove";
}

enum class Verdict { kPass, kFail, kInconclusive };

inline const char* ToString(Verdict v) {
  switch (v) {
    case Verdict::kPass:
      return "pass";
    case Verdict::kFail:
      return "fail";
    case Verdict::kInconclusive:
      return "inconclusive-due-to-slack";
  }
  return "fail";
}

// Worst of a set of verdicts: fail over inconclusive over pass.
inline Verdict Worst(Verdict a, Verdict b) {
  if (a == Verdict::kFail || b == Verdict::kFail) return Verdict::kFail;
  if (a == Verdict::kInconclusive || b == Verdict::kInconclusive) {
    return Verdict::kInconclusive;
  }
  return Verdict::kPass;
}

// Deviations checked by the truthfulness audits.
enum class DeviationSet { kAllTypes, kAbstainOnly };

// The configuration at which an audit attained its measured value.
struct Witness {
  std::size_t player = 0;
  TypeProfile profile;                  // truthful reports
  std::optional<PlayerType> deviation;  // player's alternative report
  std::vector<std::int64_t> noise;      // coins, for pointwise audits
  std::string outcome;
  std::vector<double> prior;
  std::vector<std::size_t> strategy;

  TypeProfile Deviated() const {
    TypeProfile p = profile;
    if (deviation) p.at(player) = *deviation;
    return p;
  }
};

struct AuditReport {
  std::string claim;
  std::map<std::string, double> params;
  std::string quantity;
  double measured = 0.0;
  std::string relation;  // measured <relation> bound is the claim
  double bound = 0.0;
  Verdict verdict = Verdict::kPass;
  std::optional<Witness> witness;
  std::map<std::string, double> extras;
};

// ---------------------------------------------------------------------------
// Mechanism adapters.

class ElectionTarget {
 public:
  using Stat = std::int64_t;
  using Out = Candidate;

  explicit ElectionTarget(double epsilon, double gap = 1.0)
      : epsilon_(epsilon), gap_(gap), noise_(ElectionNoise(epsilon)) {
    if (!(gap > 0.0)) throw std::domain_error("election gap must be > 0");
  }

  static const char* name() { return "election"; }
  double epsilon() const { return epsilon_; }
  double gap() const { return gap_; }
  double slack() const { return 0.0; }
  const NoiseSpec& noise() const { return noise_; }
  std::size_t coordinates() const { return 1; }

  std::vector<PlayerType> Types() const {
    return {Candidate::kA, Candidate::kB};
  }
  Stat Summarize(std::span<const PlayerType> profile) const {
    return TallyDifference(profile);
  }
  Out Evaluate(const Stat& s, std::span<const std::int64_t> noise) const {
    return ElectionEvalTally(s, noise[0]);
  }
  OutcomeDistribution<Out> Distribution(const Stat& s) const {
    return ElectionOutcomeDistFromTally(s, epsilon_);
  }
  double Utility(const PlayerType& t, const Out& o) const {
    return OutcomeUtility(ElectionUtility{gap_}, t, o);
  }
  double MaxAbsUtility() const { return gap_; }
  static std::string Label(const Out& o) { return ToString(o); }

 private:
  double epsilon_;
  double gap_;
  NoiseSpec noise_;
};

class FacilityTarget {
 public:
  using Stat = Histogram;
  using Out = LocationIndex;

  FacilityTarget(LocationSet locations, double epsilon, double slack)
      : locations_(std::move(locations)),
        epsilon_(epsilon),
        noise_(FacilityNoise(epsilon)),
        window_(WindowForSlack(noise_, locations_.size(), slack)) {}

  static const char* name() { return "facility"; }
  double epsilon() const { return epsilon_; }
  double slack() const { return window_.tail_mass; }
  const NoiseSpec& noise() const { return noise_; }
  const TruncationWindow& window() const { return window_; }
  const LocationSet& locations() const { return locations_; }
  std::size_t coordinates() const { return locations_.size(); }

  std::vector<PlayerType> Types() const {
    std::vector<PlayerType> types;
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      types.emplace_back(LocationIndex{j});
    }
    return types;
  }
  Stat Summarize(std::span<const PlayerType> profile) const {
    return BuildHistogram(profile, locations_.size());
  }
  Out Evaluate(const Stat& h, std::span<const std::int64_t> noise) const {
    return FacilityEval(h, noise);
  }
  OutcomeDistribution<Out> Distribution(const Stat& h) const {
    return FacilityOutcomeDist(h, epsilon_, window_);
  }
  double Utility(const PlayerType& t, const Out& o) const {
    return OutcomeUtility(FacilityUtility{locations_}, t, o);
  }
  double MaxAbsUtility() const { return 1.0; }
  static std::string Label(const Out& o) {
    return "l" + std::to_string(o.value);
  }

 private:
  LocationSet locations_;
  double epsilon_;
  NoiseSpec noise_;
  TruncationWindow window_;
};

class VcgTarget {
 public:
  using Stat = std::vector<std::int64_t>;
  using Out = VcgOutput;

  VcgTarget(VcgInstance instance, double epsilon, double slack)
      : instance_(instance),
        epsilon_(epsilon),
        noise_(VcgNoise(epsilon, instance.max_utility(),
                        instance.num_outcomes())),
        window_(WindowForSlack(noise_, instance.num_outcomes(), slack)),
        codec_(instance),
        grid_(std::make_shared<VcgNoiseGrid>(instance, epsilon, window_)) {}

  static const char* name() { return "vcg"; }
  const VcgInstance& instance() const { return instance_; }
  double epsilon() const { return epsilon_; }
  double slack() const { return window_.tail_mass; }
  const NoiseSpec& noise() const { return noise_; }
  const TruncationWindow& window() const { return window_; }
  const VcgOutputCodec& codec() const { return codec_; }
  const VcgNoiseGrid& grid() const { return *grid_; }
  std::size_t coordinates() const { return instance_.num_outcomes(); }

  std::vector<PlayerType> Types() const {
    std::vector<PlayerType> types;
    for (UtilityRow& row : instance_.AllRows()) types.emplace_back(std::move(row));
    return types;
  }
  Stat Summarize(std::span<const PlayerType> profile) const {
    return instance_.Welfare(profile);
  }
  Out Evaluate(const Stat& w, std::span<const std::int64_t> noise) const {
    return VcgEvalFromWelfare(instance_, w, noise);
  }
  OutcomeDistribution<Out> Distribution(const Stat& w) const {
    return VcgOutputDistFromWelfare(instance_, w, *grid_);
  }
  std::vector<double> CodeMasses(const Stat& w) const {
    return grid_->CodeMasses(codec_, w);
  }
  static std::string Label(const Out& o) { return ToString(o); }

 private:
  VcgInstance instance_;
  double epsilon_;
  NoiseSpec noise_;
  TruncationWindow window_;
  VcgOutputCodec codec_;
  std::shared_ptr<const VcgNoiseGrid> grid_;
};

namespace internal {

// One representative profile of the other players per distinct statistic,
// the lexicographically first one.
template <typename Target>
std::map<typename Target::Stat, TypeProfile> OtherProfiles(const Target& target,
                                                           std::size_t count) {
  std::vector<PlayerType> values = target.Types();
  values.emplace_back(Abstain{});
  CheckEnumerationBudget(std::pow(static_cast<double>(values.size()),
                                  static_cast<double>(count)),
                         "other-player profiles");
  std::map<typename Target::Stat, TypeProfile> reps;
  ForEachTuple(values, count, [&](const std::vector<PlayerType>& p) {
    reps.try_emplace(target.Summarize(p), p);
  });
  return reps;
}

inline TypeProfile WithPlayer(const PlayerType& t, const TypeProfile& others) {
  TypeProfile p;
  p.reserve(others.size() + 1);
  p.push_back(t);
  p.insert(p.end(), others.begin(), others.end());
  return p;
}

template <typename Target>
class DistributionCache {
 public:
  using Dist = OutcomeDistribution<typename Target::Out>;

  explicit DistributionCache(const Target& target) : target_(target) {}

  const Dist& Get(const TypeProfile& profile) {
    typename Target::Stat s = target_.Summarize(profile);
    auto it = cache_.find(s);
    if (it == cache_.end()) {
      it = cache_.emplace(s, target_.Distribution(s)).first;
    }
    return it->second;
  }
  std::size_t size() const { return cache_.size(); }

 private:
  const Target& target_;
  std::map<typename Target::Stat, Dist> cache_;
};

inline std::vector<std::vector<std::size_t>> SimplexGrid(std::size_t parts,
                                                         std::size_t total) {
  std::vector<std::vector<std::size_t>> out;
  std::vector<std::size_t> cur(parts, 0);
  auto rec = [&](auto&& self, std::size_t pos, std::size_t left) -> void {
    if (pos + 1 == parts) {
      cur[pos] = left;
      out.push_back(cur);
      return;
    }
    for (std::size_t v = 0; v <= left; ++v) {
      cur[pos] = v;
      self(self, pos + 1, left - v);
    }
  };
  if (parts > 0) rec(rec, 0, total);
  return out;
}

}  // namespace internal

// ---------------------------------------------------------------------------
// Differential privacy.

// Largest log ratio ln(Pr[M(x) = o] / Pr[M(x') = o]) over neighboring
// inputs x, x' and outputs o.
template <typename Target>
AuditReport DpAudit(const Target& target, NeighborModel model, std::size_t n,
                    double target_epsilon,
                    double tolerance = kDefaultTolerance) {
  if (n < 1) throw std::domain_error("need at least one player");
  using Out = typename Target::Out;
  const auto others = internal::OtherProfiles(target, n - 1);
  internal::DistributionCache<Target> cache(target);
  const std::vector<PlayerType> types = target.Types();
  std::vector<std::pair<PlayerType, PlayerType>> pairs;
  for (const PlayerType& a : types) {
    if (model == NeighborModel::kAddRemove) {
      pairs.emplace_back(a, Abstain{});
      pairs.emplace_back(Abstain{}, a);
      continue;
    }
    for (const PlayerType& b : types) {
      if (!(a == b)) pairs.emplace_back(a, b);
    }
  }

  double raw_max = -kInf;
  double upper_max = -kInf;
  double lower_max = -kInf;
  Witness witness;
  std::size_t compared = 0;
  for (const auto& [stat, rest] : others) {
    for (const auto& [a, b] : pairs) {
      const TypeProfile pa = internal::WithPlayer(a, rest);
      const TypeProfile pb = internal::WithPlayer(b, rest);
      const auto& da = cache.Get(pa);
      const auto& db = cache.Get(pb);
      std::map<Out, bool> keys;
      for (const auto& [key, lp] : da.log_probs()) keys.emplace(key, true);
      for (const auto& [key, lp] : db.log_probs()) keys.emplace(key, true);
      for (const auto& [key, unused] : keys) {
        const double la = da.LogProb(key);
        const double lb = db.LogProb(key);
        ++compared;
        const double raw = la == kNegInf ? kNegInf
                           : lb == kNegInf ? kInf
                                           : la - lb;
        const double upper =
            lb == kNegInf ? kInf : std::log(std::exp(la) + da.slack()) - lb;
        const double lower =
            la == kNegInf ? kNegInf
                          : la - std::log(std::exp(lb) + db.slack());
        if (raw > raw_max) {
          raw_max = raw;
          witness.profile = pa;
          witness.deviation = b;
          witness.outcome = Target::Label(key);
        }
        upper_max = std::max(upper_max, upper);
        lower_max = std::max(lower_max, lower);
      }
    }
  }

  if (compared == 0) {
    // A single type and substitution: no neighboring pairs.
    raw_max = upper_max = lower_max = 0.0;
  }
  AuditReport r;
  r.claim = "dp";
  r.params = {{"n", static_cast<double>(n)},
              {"eps", target.epsilon()},
              {"target_eps", target_epsilon},
              {"slack", target.slack()},
              {"substitution", model == NeighborModel::kSubstitution ? 1.0 : 0.0}};
  r.quantity = "eps_eff";
  r.measured = raw_max;
  r.relation = "<=";
  r.bound = target_epsilon;
  const double threshold = target_epsilon + std::log1p(tolerance);
  r.verdict = upper_max <= threshold  ? Verdict::kPass
              : lower_max > threshold ? Verdict::kFail
                                      : Verdict::kInconclusive;
  r.witness = witness;
  r.extras = {{"certified_upper", upper_max},
              {"certified_lower", lower_max},
              {"ratios_compared", static_cast<double>(compared)},
              {"distributions", static_cast<double>(cache.size())}};
  return r;
}

// ln Pr[M(profile) = outcome] - ln Pr[M(deviated profile) = outcome].
template <typename Target>
double ReplayDpWitness(const Target& target, const Witness& w) {
  const auto da = target.Distribution(target.Summarize(w.profile));
  const auto db = target.Distribution(target.Summarize(w.Deviated()));
  for (const auto& [key, lp] : da.log_probs()) {
    if (Target::Label(key) == w.outcome) return lp - db.LogProb(key);
  }
  throw std::domain_error("witness outcome not in the support");
}

// Per-coordinate check on the VCG value tuple V = w + lambda: the log
// density ratio of one coordinate between neighboring welfare vectors,
// divided by the utility change in that coordinate. Pointwise over the
// window, so truncation does not enter.
inline AuditReport VcgValueTupleAudit(const VcgInstance& instance,
                                      double epsilon, std::size_t n,
                                      const TruncationWindow& window,
                                      double tolerance = kDefaultTolerance) {
  if (n < 1) throw std::domain_error("need at least one player");
  const NoiseSpec spec =
      VcgNoise(epsilon, instance.max_utility(), instance.num_outcomes());
  const std::vector<UtilityRow> rows = instance.AllRows();
  std::vector<PlayerType> values(rows.begin(), rows.end());
  std::map<std::vector<std::int64_t>, TypeProfile> others;
  ForEachTuple(values, n - 1, [&](const std::vector<PlayerType>& p) {
    others.try_emplace(instance.Welfare(p), p);
  });
  const std::int64_t k = window.bound;
  double per_unit_max = 0.0;
  double tuple_max = 0.0;
  Witness witness;
  for (const auto& [w_rest, rest] : others) {
    for (const UtilityRow& a : rows) {
      for (const UtilityRow& b : rows) {
        if (a == b) continue;
        double tuple = 0.0;
        for (std::size_t o = 0; o < instance.num_outcomes(); ++o) {
          const std::int64_t wa = w_rest[o] + a[o];
          const std::int64_t wb = w_rest[o] + b[o];
          if (wa == wb) continue;
          double coord_max = -kInf;
          for (std::int64_t v = std::max(wa, wb) - k; v <= std::min(wa, wb) + k;
               ++v) {
            const double lr = LogPmf(spec, v - wa) - LogPmf(spec, v - wb);
            coord_max = std::max(coord_max, lr);
            const double unit = lr / static_cast<double>(std::abs(wa - wb));
            if (unit > per_unit_max) {
              per_unit_max = unit;
              witness.profile = internal::WithPlayer(a, rest);
              witness.deviation = b;
              witness.noise.assign(instance.num_outcomes(), 0);
              witness.noise[o] = v - wa;
              witness.outcome = "coordinate " + std::to_string(o);
            }
          }
          if (coord_max > -kInf) tuple += coord_max;
        }
        tuple_max = std::max(tuple_max, tuple);
      }
    }
  }
  AuditReport r;
  r.claim = "vcg-value-tuple";
  r.params = {{"n", static_cast<double>(n)},
              {"eps", epsilon},
              {"outcomes", static_cast<double>(instance.num_outcomes())},
              {"M", static_cast<double>(instance.max_utility())},
              {"K", static_cast<double>(k)}};
  r.quantity = "max log ratio per unit utility change";
  r.measured = per_unit_max;
  r.relation = "<=";
  r.bound = epsilon / static_cast<double>(instance.num_outcomes());
  const bool ok = per_unit_max <= r.bound + tolerance &&
                  tuple_max <= epsilon + tolerance;
  r.verdict = ok ? Verdict::kPass : Verdict::kFail;
  r.witness = witness;
  r.extras = {{"noise_rate", spec.rate()},
              {"tuple_max_log_ratio", tuple_max},
              {"tuple_bound", epsilon}};
  return r;
}

// ---------------------------------------------------------------------------
// Universal truthfulness and individual rationality.

// For every coin value in the window and every deviation that changes the
// outcome, the outcome-utility gap Uo(t, M(t)) - Uo(t, M(t')) must be at
// least 2 F(e^eps_eff). The extremal privacy adversary of the privacy
// assumption (+F on the lie, -F on the truth) turns this into a total
// utility comparison; its margin is reported alongside.
template <typename Target>
AuditReport PointwiseTruthfulnessAudit(const Target& target,
                                       const PrivacyModel& privacy,
                                       double eps_eff, std::size_t n,
                                       const TruncationWindow& window,
                                       DeviationSet deviations,
                                       double tolerance = kDefaultTolerance) {
  if (n < 1) throw std::domain_error("need at least one player");
  if (window.coordinates != target.coordinates()) {
    throw std::domain_error("window does not match the mechanism's noise");
  }
  using Out = typename Target::Out;
  const auto others = internal::OtherProfiles(target, n - 1);
  const std::vector<PlayerType> types = target.Types();
  const double f_eff = privacy.AtExp(eps_eff);
  const double bound = 2.0 * f_eff;

  std::vector<std::vector<std::int64_t>> coins;
  ForEachNoiseVector(target.noise(), window,
                     [&](std::span<const std::int64_t> r, double) {
                       coins.emplace_back(r.begin(), r.end());
                     });

  double min_gap = kInf;
  std::size_t changes = 0;
  std::size_t nonpositive = 0;
  std::size_t checked = 0;
  Witness witness;
  for (const auto& [stat, rest] : others) {
    for (const PlayerType& truth : types) {
      std::vector<PlayerType> alternatives;
      if (deviations == DeviationSet::kAbstainOnly) {
        alternatives.emplace_back(Abstain{});
      } else {
        for (const PlayerType& t : types) {
          if (!(t == truth)) alternatives.push_back(t);
        }
        alternatives.emplace_back(Abstain{});
      }
      const TypeProfile pt = internal::WithPlayer(truth, rest);
      const auto st = target.Summarize(pt);
      for (const PlayerType& lie : alternatives) {
        const TypeProfile pl = internal::WithPlayer(lie, rest);
        const auto sl = target.Summarize(pl);
        for (const auto& r : coins) {
          ++checked;
          const Out ot = target.Evaluate(st, r);
          const Out ol = target.Evaluate(sl, r);
          if (ot == ol) continue;
          ++changes;
          const double gap = target.Utility(truth, ot) - target.Utility(truth, ol);
          if (!(gap > 0.0)) ++nonpositive;
          if (gap < min_gap) {
            min_gap = gap;
            witness.profile = pt;
            witness.deviation = lie;
            witness.noise = r;
            witness.outcome = Target::Label(ot) + " -> " + Target::Label(ol);
          }
        }
      }
    }
  }

  AuditReport rep;
  rep.claim = deviations == DeviationSet::kAbstainOnly ? "ir"
                                                       : "universal-truthfulness";
  rep.params = {{"n", static_cast<double>(n)},
                {"eps", target.epsilon()},
                {"eps_eff", eps_eff},
                {"K", static_cast<double>(window.bound)},
                {"window_tail_mass", window.tail_mass}};
  if (privacy.kind() == PrivacyModel::Kind::kLogLinear) {
    rep.params["nu"] = privacy.nu();
  }
  rep.quantity = "min outcome-utility gap over outcome-changing deviations";
  rep.measured = min_gap;
  rep.relation = ">=";
  rep.bound = bound;
  rep.verdict = min_gap >= bound - tolerance ? Verdict::kPass : Verdict::kFail;
  if (changes > 0) rep.witness = witness;
  rep.extras = {{"coins_checked", static_cast<double>(checked)},
                {"outcome_changes", static_cast<double>(changes)},
                {"nonpositive_gaps", static_cast<double>(nonpositive)},
                {"adversary_margin", changes > 0 ? min_gap - bound : kInf},
                {"bound_nominal_eps", 2.0 * privacy.AtExp(target.epsilon())}};
  return rep;
}

template <typename Target>
AuditReport UniversalTruthfulnessAudit(const Target& target,
                                       const PrivacyModel& privacy,
                                       double eps_eff, std::size_t n,
                                       const TruncationWindow& window,
                                       double tolerance = kDefaultTolerance) {
  return PointwiseTruthfulnessAudit(target, privacy, eps_eff, n, window,
                                    DeviationSet::kAllTypes, tolerance);
}

template <typename Target>
AuditReport IrAudit(const Target& target, const PrivacyModel& privacy,
                    double eps_eff, std::size_t n,
                    const TruncationWindow& window,
                    double tolerance = kDefaultTolerance) {
  return PointwiseTruthfulnessAudit(target, privacy, eps_eff, n, window,
                                    DeviationSet::kAbstainOnly, tolerance);
}

// Uo(t, M(t; r)) - Uo(t, M(t'; r)) at the witness.
template <typename Target>
double ReplayPointwiseWitness(const Target& target, const Witness& w) {
  const PlayerType& truth = w.profile.at(w.player);
  const auto ot = target.Evaluate(target.Summarize(w.profile), w.noise);
  const auto ol = target.Evaluate(target.Summarize(w.Deviated()), w.noise);
  return target.Utility(truth, ot) - target.Utility(truth, ol);
}

// ---------------------------------------------------------------------------
// VCG.

namespace internal {

// Scaled payment of every row on every output code.
inline std::vector<std::vector<std::int64_t>> PaymentTable(
    const VcgOutputCodec& codec, const std::vector<UtilityRow>& rows) {
  std::vector<VcgOutput> outputs;
  outputs.reserve(codec.num_codes());
  for (std::uint32_t c = 0; c < codec.num_codes(); ++c) {
    outputs.push_back(codec.Decode(c));
  }
  std::vector<std::vector<std::int64_t>> pay(rows.size());
  for (std::size_t a = 0; a < rows.size(); ++a) {
    pay[a].resize(codec.num_codes());
    for (std::uint32_t c = 0; c < codec.num_codes(); ++c) {
      pay[a][c] = VcgPaymentScaled(rows[a], outputs[c]);
    }
  }
  return pay;
}

inline std::map<std::vector<std::int64_t>, TypeProfile> VcgOthers(
    const VcgInstance& instance, std::size_t count) {
  const std::vector<UtilityRow> rows = instance.AllRows();
  const std::vector<PlayerType> values(rows.begin(), rows.end());
  CheckEnumerationBudget(std::pow(static_cast<double>(values.size()),
                                  static_cast<double>(count)),
                         "other-player profiles");
  std::map<std::vector<std::int64_t>, TypeProfile> reps;
  ForEachTuple(values, count, [&](const std::vector<PlayerType>& p) {
    reps.try_emplace(instance.Welfare(p), p);
  });
  return reps;
}

inline bool RowsDifferByConstant(const UtilityRow& a, const UtilityRow& b) {
  for (std::size_t o = 1; o < a.size(); ++o) {
    if (a[o] - b[o] != a[0] - b[0]) return false;
  }
  return true;
}

inline std::vector<std::int64_t> AddRow(std::vector<std::int64_t> w,
                                        const UtilityRow& row) {
  for (std::size_t o = 0; o < w.size(); ++o) w[o] += row[o];
  return w;
}

}  // namespace internal

// For every coin vector in [-K, K]^O and every deviation that changes the
// winner: (Uo(t, o*) - P) - (Uo(t, o') - P') >= 1/|O|, in exact arithmetic.
// The all-zero row doubles as abstention, so IR deviations are included.
inline AuditReport VcgPointwiseGainAudit(const VcgInstance& instance,
                                         std::size_t n,
                                         std::int64_t noise_bound) {
  if (n < 1) throw std::domain_error("need at least one player");
  if (noise_bound < 0) throw std::domain_error("noise bound must be >= 0");
  const std::vector<UtilityRow> rows = instance.AllRows();
  const std::size_t n_out = instance.num_outcomes();
  const std::int64_t scale = instance.scale();
  const VcgOutputCodec codec(instance);
  const auto pay = internal::PaymentTable(codec, rows);
  const auto others = internal::VcgOthers(instance, n - 1);

  std::vector<std::int64_t> values;
  for (std::int64_t v = -noise_bound; v <= noise_bound; ++v) values.push_back(v);
  CheckEnumerationBudget(
      std::pow(static_cast<double>(values.size()), static_cast<double>(n_out)) *
          static_cast<double>(rows.size() * rows.size() * others.size()),
      "VCG pointwise sweep");
  std::vector<std::vector<std::int64_t>> coins;
  ForEachTuple(values, n_out,
               [&](const std::vector<std::int64_t>& l) { coins.push_back(l); });

  std::int64_t min_gain = std::numeric_limits<std::int64_t>::max();
  std::size_t changes = 0;
  std::size_t checked = 0;
  Witness witness;
  std::vector<std::vector<std::uint32_t>> codes(rows.size(),
                                                std::vector<std::uint32_t>(coins.size()));
  for (const auto& [w_rest, rest] : others) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto w = internal::AddRow(w_rest, rows[a]);
      for (std::size_t k = 0; k < coins.size(); ++k) {
        codes[a][k] = codec.Code(w, coins[k]);
      }
    }
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (a == b) continue;
        for (std::size_t k = 0; k < coins.size(); ++k) {
          ++checked;
          const std::uint32_t ca = codes[a][k];
          const std::uint32_t cb = codes[b][k];
          const std::size_t oa = codec.Winner(ca);
          const std::size_t ob = codec.Winner(cb);
          if (oa == ob) continue;
          ++changes;
          const std::int64_t gain = scale * (rows[a][oa] - rows[a][ob]) -
                                    (pay[a][ca] - pay[b][cb]);
          if (gain < min_gain) {
            min_gain = gain;
            witness.profile = internal::WithPlayer(rows[a], rest);
            witness.deviation = rows[b];
            witness.noise = coins[k];
            witness.outcome = "o*=" + std::to_string(oa) + " -> " +
                              std::to_string(ob);
          }
        }
      }
    }
  }
  AuditReport r;
  r.claim = "lem-vcg-outcome";
  r.params = {{"n", static_cast<double>(n)},
              {"outcomes", static_cast<double>(n_out)},
              {"M", static_cast<double>(instance.max_utility())},
              {"K", static_cast<double>(noise_bound)}};
  r.quantity = "min utility gain of truth over winner-changing deviations";
  r.relation = ">=";
  r.bound = 1.0 / static_cast<double>(scale);
  if (changes == 0) {
    r.measured = kInf;
    r.verdict = Verdict::kPass;
  } else {
    r.measured = Rational(min_gain, scale).ToDouble();
    r.verdict = min_gain >= 1 ? Verdict::kPass : Verdict::kFail;
    r.witness = witness;
    r.extras["min_gain_scaled"] = static_cast<double>(min_gain);
  }
  r.extras["scale"] = static_cast<double>(scale);
  r.extras["coins_checked"] = static_cast<double>(checked);
  r.extras["winner_changes"] = static_cast<double>(changes);
  return r;
}

// Exact gain (Uo(t, o*) - P) - (Uo(t, o') - P') at the witness.
inline Rational ReplayVcgGainWitness(const VcgInstance& instance,
                                     const Witness& w) {
  const UtilityRow truth = instance.RowOf(w.profile.at(w.player));
  const UtilityRow lie = instance.RowOf(*w.deviation);
  const VcgOutput ot = VcgEval(instance, w.profile, w.noise);
  const VcgOutput ol = VcgEval(instance, w.Deviated(), w.noise);
  const std::int64_t scale = instance.scale();
  const std::int64_t gain =
      scale * (truth[ot.winner.value] - truth[ol.winner.value]) -
      (VcgPaymentScaled(truth, ot) - VcgPaymentScaled(lie, ol));
  return Rational(gain, scale);
}

struct CoupledVcgProbabilities {
  double winner_differs = 0.0;
  double same_winner_info_differs = 0.0;
};

// Pr over shared noise in the window that the winner differs, and that the
// winner agrees while the payment information differs.
inline CoupledVcgProbabilities CoupledProbabilities(
    const VcgTarget& target, std::span<const std::int64_t> welfare_a,
    std::span<const std::int64_t> welfare_b) {
  const VcgNoiseGrid& grid = target.grid();
  const VcgOutputCodec& codec = target.codec();
  CompensatedSum differs;
  CompensatedSum info;
  for (std::size_t k = 0; k < grid.size(); ++k) {
    const std::uint32_t ca = codec.Code(welfare_a, grid.Point(k));
    const std::uint32_t cb = codec.Code(welfare_b, grid.Point(k));
    if (ca == cb) continue;
    if (codec.Winner(ca) != codec.Winner(cb)) {
      differs.Add(grid.Weight(k));
    } else {
      info.Add(grid.Weight(k));
    }
  }
  return {differs.Value(), info.Value()};
}

// Pr[same winner and pi differs] <= 2 M e^{eps/|O|} Pr[winner differs] for
// every deviation, with both sides taken over shared noise.
inline AuditReport VcgPaymentInfoAudit(const VcgTarget& target, std::size_t n,
                                       double tolerance = kDefaultTolerance) {
  if (n < 1) throw std::domain_error("need at least one player");
  const VcgInstance& instance = target.instance();
  const VcgNoiseGrid& grid = target.grid();
  const VcgOutputCodec& codec = target.codec();
  const std::vector<UtilityRow> rows = instance.AllRows();
  const auto others = internal::VcgOthers(instance, n - 1);
  const double factor =
      2.0 * instance.max_utility() *
      std::exp(target.epsilon() / static_cast<double>(instance.num_outcomes()));
  const double s = target.slack();
  CheckEnumerationBudget(static_cast<double>(grid.size()) *
                             static_cast<double>(rows.size() * rows.size()) *
                             static_cast<double>(others.size()),
                         "VCG coupled sweep");

  double raw_max = -kInf;
  double upper_max = -kInf;
  double lower_max = -kInf;
  double coupling_violation = -kInf;
  double max_info_prob = 0.0;
  Witness witness;
  std::size_t pairs = 0;
  std::vector<std::vector<std::uint32_t>> codes(rows.size());
  std::vector<std::vector<std::uint8_t>> winners(rows.size());
  std::vector<std::vector<double>> masses(rows.size());
  for (const auto& [w_rest, rest] : others) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto w = internal::AddRow(w_rest, rows[a]);
      codes[a] = grid.Codes(codec, w);
      winners[a].resize(codes[a].size());
      std::vector<CompensatedSum> acc(codec.num_codes());
      for (std::size_t k = 0; k < codes[a].size(); ++k) {
        winners[a][k] = static_cast<std::uint8_t>(codec.Winner(codes[a][k]));
        acc[codes[a][k]].Add(grid.Weight(k));
      }
      masses[a].resize(acc.size());
      for (std::size_t c = 0; c < acc.size(); ++c) masses[a][c] = acc[c].Value();
    }
    for (std::size_t a = 0; a < rows.size(); ++a) {
      for (std::size_t b = a + 1; b < rows.size(); ++b) {
        ++pairs;
        CompensatedSum differs;
        CompensatedSum info;
        const auto& ca = codes[a];
        const auto& cb = codes[b];
        for (std::size_t k = 0; k < ca.size(); ++k) {
          if (ca[k] == cb[k]) continue;
          if (winners[a][k] != winners[b][k]) {
            differs.Add(grid.Weight(k));
          } else {
            info.Add(grid.Weight(k));
          }
        }
        const double left = info.Value();
        const double right = differs.Value();
        const double raw = left - factor * right;
        max_info_prob = std::max(max_info_prob, left);
        if (raw > raw_max) {
          raw_max = raw;
          witness.profile = internal::WithPlayer(rows[a], rest);
          witness.deviation = rows[b];
          witness.outcome = "Pr[same winner, pi differs]=" + std::to_string(left) +
                            " Pr[winner differs]=" + std::to_string(right);
        }
        // Rows that differ by a constant shift every value equally, so the
        // outputs agree on all noise, inside the window or not.
        const bool shifted = internal::RowsDifferByConstant(rows[a], rows[b]);
        const double slack_here = shifted ? 0.0 : s;
        upper_max = std::max(upper_max, left + slack_here - factor * right);
        lower_max = std::max(lower_max, left - factor * (right + slack_here));
        const BoundedValue sd =
            StatisticalDifference(masses[a], masses[b], s, s);
        coupling_violation =
            std::max(coupling_violation, sd.value - (left + right));
      }
    }
  }
  AuditReport r;
  r.claim = "lem-vcg-payments";
  r.params = {{"n", static_cast<double>(n)},
              {"eps", target.epsilon()},
              {"outcomes", static_cast<double>(instance.num_outcomes())},
              {"M", static_cast<double>(instance.max_utility())},
              {"K", static_cast<double>(target.window().bound)},
              {"slack", s}};
  r.quantity = "max of Pr[same winner, pi differs] - 2M e^{eps/|O|} Pr[winner differs]";
  r.measured = raw_max;
  r.relation = "<=";
  r.bound = 0.0;
  r.verdict = upper_max <= tolerance  ? Verdict::kPass
              : lower_max > tolerance ? Verdict::kFail
                                      : Verdict::kInconclusive;
  r.witness = witness;
  r.extras = {{"factor", factor},
              {"certified_upper", upper_max},
              {"certified_lower", lower_max},
              {"deviation_pairs", static_cast<double>(pairs)},
              {"max_info_only_prob", max_info_prob},
              {"coupling_bound_violation", coupling_violation}};
  return r;
}

// Margin E[Uo - P | truth] - E[Uo - P | lie] - 2 F(e^eps_eff) SD(outputs),
// minimized over deviations. Payments use the reported row; outcome
// utilities use the true row.
inline AuditReport VcgExpectationTruthfulnessAudit(
    const VcgTarget& target, const PrivacyModel& privacy, double eps_eff,
    std::size_t n, DeviationSet deviations = DeviationSet::kAllTypes,
    double tolerance = kDefaultTolerance) {
  if (n < 1) throw std::domain_error("need at least one player");
  const VcgInstance& instance = target.instance();
  const VcgOutputCodec& codec = target.codec();
  const std::vector<UtilityRow> rows = instance.AllRows();
  const std::size_t zero_row = 0;  // AllRows starts with the all-zero row
  const auto pay = internal::PaymentTable(codec, rows);
  const auto others = internal::VcgOthers(instance, n - 1);
  const std::size_t n_out = instance.num_outcomes();
  const double scale = static_cast<double>(instance.scale());
  const int m = instance.max_utility();
  const double f_eff = privacy.AtExp(eps_eff);
  const double s = target.slack();
  const double adjust = 2.0 * m * s + 2.0 * f_eff * s;

  std::map<std::vector<std::int64_t>, std::vector<double>> mass_cache;
  auto masses = [&](const std::vector<std::int64_t>& w) -> const std::vector<double>& {
    auto it = mass_cache.find(w);
    if (it == mass_cache.end()) it = mass_cache.emplace(w, target.CodeMasses(w)).first;
    return it->second;
  };
  // E[|O| (Uo(truth, o*)) - |O| P(report)] under the given output masses.
  auto expected = [&](const std::vector<double>& mass, std::size_t truth,
                      std::size_t report) {
    CompensatedSum e;
    for (std::uint32_t c = 0; c < mass.size(); ++c) {
      if (mass[c] == 0.0) continue;
      const std::size_t o = codec.Winner(c);
      e.Add(mass[c] * (scale * rows[truth][o] -
                       static_cast<double>(pay[report][c])));
    }
    return e.Value() / scale;
  };

  double min_margin = kInf;
  double min_lower = kInf;
  double min_upper = kInf;
  double max_sd = 0.0;
  std::size_t checked = 0;
  Witness witness;
  for (const auto& [w_rest, rest] : others) {
    for (std::size_t a = 0; a < rows.size(); ++a) {
      const auto& ma = masses(internal::AddRow(w_rest, rows[a]));
      const double truthful = expected(ma, a, a);
      for (std::size_t b = 0; b < rows.size(); ++b) {
        if (b == a) continue;
        if (deviations == DeviationSet::kAbstainOnly && b != zero_row) continue;
        ++checked;
        const auto& mb = masses(internal::AddRow(w_rest, rows[b]));
        const double lie = expected(mb, a, b);
        const double sd = StatisticalDifference(ma, mb, s, s).value;
        max_sd = std::max(max_sd, sd);
        const double margin = truthful - lie - 2.0 * f_eff * sd;
        if (margin < min_margin) {
          min_margin = margin;
          witness.profile = internal::WithPlayer(rows[a], rest);
          witness.deviation = rows[b];
          witness.outcome = "E[truth]=" + std::to_string(truthful) +
                            " E[lie]=" + std::to_string(lie) +
                            " SD=" + std::to_string(sd);
        }
        min_lower = std::min(min_lower, margin - adjust);
        min_upper = std::min(min_upper, margin + adjust);
      }
    }
  }
  const double f_nominal = privacy.AtExp(target.epsilon());
  const double condition =
      2.0 * f_nominal * static_cast<double>(n_out) *
      (1.0 + 2.0 * m * std::exp(target.epsilon() / static_cast<double>(n_out)));

  AuditReport r;
  r.claim = deviations == DeviationSet::kAbstainOnly ? "ir" : "thm-vcg";
  r.params = {{"n", static_cast<double>(n)},
              {"eps", target.epsilon()},
              {"eps_eff", eps_eff},
              {"outcomes", static_cast<double>(n_out)},
              {"M", static_cast<double>(m)},
              {"K", static_cast<double>(target.window().bound)},
              {"slack", s}};
  if (privacy.kind() == PrivacyModel::Kind::kLogLinear) r.params["nu"] = privacy.nu();
  r.quantity = "min of E[U|truth] - E[U|lie] - 2F(e^eps_eff) SD";
  r.measured = min_margin;
  r.relation = ">=";
  r.bound = 0.0;
  r.verdict = min_lower >= -tolerance  ? Verdict::kPass
              : min_upper < -tolerance ? Verdict::kFail
                                       : Verdict::kInconclusive;
  if (checked > 0) r.witness = witness;
  r.extras = {{"deviations_checked", static_cast<double>(checked)},
              {"slack_adjustment", adjust},
              {"max_sd", max_sd},
              {"condition_value", condition},
              {"condition_holds", condition <= 1.0 ? 1.0 : 0.0}};
  return r;
}

// ---------------------------------------------------------------------------
// Mutual-information privacy (Xiao).

// Strategies are maps from true type index to reported type index; the
// identity is truthful reporting.
template <typename Target>
double XiaoValue(const Target& target, std::span<const double> prior,
                 double nu, const TypeProfile& others,
                 std::span<const std::size_t> strategy) {
  using Dist = OutcomeDistribution<typename Target::Out>;
  const std::vector<PlayerType> types = target.Types();
  std::vector<Dist> per_report;
  for (const PlayerType& t : types) {
    per_report.push_back(
        target.Distribution(target.Summarize(internal::WithPlayer(t, others))));
  }
  CompensatedSum utility;
  for (std::size_t t = 0; t < types.size(); ++t) {
    if (prior[t] == 0.0) continue;
    for (const auto& [key, lp] : per_report[strategy[t]].log_probs()) {
      utility.Add(prior[t] * std::exp(lp) * target.Utility(types[t], key));
    }
  }
  const JointDistribution joint = JointDistribution::FromChannel<typename Target::Out>(
      prior, per_report, strategy);
  return utility.Value() - nu * MutualInformation(joint);
}

// min over strategies s of value(identity) - value(s), where
// value(s) = E[Uo(T, M(s(T)))] - nu I(T; M(s(T))) with T drawn from the prior
// and the other players' reports fixed.
template <typename Target>
AuditReport XiaoTruthfulnessAudit(const Target& target,
                                  std::span<const double> prior, double nu,
                                  const TypeProfile& others,
                                  double tolerance = kDefaultTolerance) {
  using Dist = OutcomeDistribution<typename Target::Out>;
  const std::vector<PlayerType> types = target.Types();
  const std::size_t m = types.size();
  if (prior.size() != m) throw std::domain_error("prior size differs from |Theta|");
  CompensatedSum total;
  for (double p : prior) {
    if (!(p >= 0.0)) throw std::domain_error("negative prior mass");
    total.Add(p);
  }
  if (std::abs(total.Value() - 1.0) > 1e-9) {
    throw std::domain_error("prior masses must sum to 1");
  }
  CheckEnumerationBudget(std::pow(static_cast<double>(m), static_cast<double>(m)),
                         "Xiao strategy enumeration");

  std::vector<Dist> per_report;
  std::size_t outputs = 1;
  for (const PlayerType& t : types) {
    per_report.push_back(
        target.Distribution(target.Summarize(internal::WithPlayer(t, others))));
    outputs = std::max(outputs, per_report.back().size());
  }
  auto value = [&](std::span<const std::size_t> strategy) {
    CompensatedSum utility;
    for (std::size_t t = 0; t < m; ++t) {
      if (prior[t] == 0.0) continue;
      for (const auto& [key, lp] : per_report[strategy[t]].log_probs()) {
        utility.Add(prior[t] * std::exp(lp) * target.Utility(types[t], key));
      }
    }
    const JointDistribution joint =
        JointDistribution::FromChannel<typename Target::Out>(prior, per_report,
                                                             strategy);
    return std::make_pair(utility.Value(), MutualInformation(joint));
  };

  std::vector<std::size_t> identity(m);
  for (std::size_t t = 0; t < m; ++t) identity[t] = t;
  const auto [u_truth, i_truth] = value(identity);
  const double v_truth = u_truth - nu * i_truth;

  std::vector<std::size_t> index_values(m);
  for (std::size_t t = 0; t < m; ++t) index_values[t] = t;
  double min_margin = kInf;
  std::size_t strategies = 0;
  Witness witness;
  ForEachTuple(index_values, m, [&](const std::vector<std::size_t>& sigma) {
    ++strategies;
    const auto [u, info] = value(sigma);
    const double margin = v_truth - (u - nu * info);
    if (margin < min_margin) {
      min_margin = margin;
      witness.profile = internal::WithPlayer(types[0], others);
      witness.prior.assign(prior.begin(), prior.end());
      witness.strategy = sigma;
      witness.outcome = "I=" + std::to_string(info);
    }
  });
  const double s = target.slack();
  const double slack_margin =
      2.0 * s * (target.MaxAbsUtility() +
                 nu * std::log(static_cast<double>(std::max<std::size_t>(outputs, 2))));

  AuditReport r;
  r.claim = "xiao";
  r.params = {{"n", static_cast<double>(others.size() + 1)},
              {"eps", target.epsilon()},
              {"nu", nu},
              {"types", static_cast<double>(m)},
              {"slack", s}};
  r.quantity = "min over strategies of truthful value minus strategy value";
  r.measured = min_margin;
  r.relation = ">=";
  r.bound = 0.0;
  r.verdict = min_margin >= -tolerance                ? Verdict::kPass
              : min_margin >= -tolerance - slack_margin ? Verdict::kInconclusive
                                                        : Verdict::kFail;
  r.witness = witness;
  r.extras = {{"strategies", static_cast<double>(strategies)},
              {"truthful_mutual_information", i_truth},
              {"truthful_expected_utility", u_truth},
              {"slack_margin", slack_margin}};
  return r;
}

// value(identity) - value(strategy) at the witness.
template <typename Target>
double ReplayXiaoWitness(const Target& target, double nu, const Witness& w) {
  TypeProfile others(w.profile.begin() + 1, w.profile.end());
  std::vector<std::size_t> identity(w.strategy.size());
  for (std::size_t t = 0; t < identity.size(); ++t) identity[t] = t;
  return XiaoValue(target, w.prior, nu, others, identity) -
         XiaoValue(target, w.prior, nu, others, w.strategy);
}

// ---------------------------------------------------------------------------
// Posterior closeness.

// For every prior on the grid, every outcome with positive evidence and every
// type with positive prior mass, posterior / prior must lie in [1/x, x],
// where x is the largest likelihood ratio between two types at that outcome.
// Measured is the largest excursion outside the bracket.
template <typename Target>
AuditReport PosteriorBoundAudit(const Target& target, const TypeProfile& others,
                                double step, double tolerance = kDefaultTolerance) {
  using Out = typename Target::Out;
  using Dist = OutcomeDistribution<Out>;
  if (!(step > 0.0 && step <= 1.0)) throw std::domain_error("grid step must lie in (0, 1]");
  const auto cells = static_cast<std::size_t>(std::llround(1.0 / step));
  if (std::abs(static_cast<double>(cells) * step - 1.0) > 1e-9) {
    throw std::domain_error("grid step must divide 1");
  }
  const std::vector<PlayerType> types = target.Types();
  const std::size_t m = types.size();
  std::vector<Dist> per_type;
  std::map<Out, bool> outcomes;
  for (const PlayerType& t : types) {
    per_type.push_back(
        target.Distribution(target.Summarize(internal::WithPlayer(t, others))));
    for (const auto& [key, lp] : per_type.back().log_probs()) outcomes.emplace(key, true);
  }
  const auto grid = internal::SimplexGrid(m, cells);

  double worst = 0.0;
  std::size_t zero_evidence = 0;
  std::size_t unbounded = 0;
  std::size_t checks = 0;
  Witness witness;
  witness.profile = internal::WithPlayer(types[0], others);
  for (const auto& [key, unused] : outcomes) {
    std::vector<double> like(m);
    double lo = kInf;
    double hi = 0.0;
    for (std::size_t t = 0; t < m; ++t) {
      like[t] = per_type[t].Prob(key);
      lo = std::min(lo, like[t]);
      hi = std::max(hi, like[t]);
    }
    const double x = lo > 0.0 ? hi / lo : kInf;
    if (x == kInf) ++unbounded;
    for (const auto& cell : grid) {
      std::vector<double> prior(m);
      for (std::size_t t = 0; t < m; ++t) {
        prior[t] = static_cast<double>(cell[t]) / static_cast<double>(cells);
      }
      std::vector<double> post;
      try {
        post = BayesPosterior<Out>(prior, key, per_type);
      } catch (const std::domain_error&) {
        ++zero_evidence;
        continue;
      }
      for (std::size_t t = 0; t < m; ++t) {
        if (prior[t] == 0.0) continue;
        ++checks;
        const double ratio = post[t] / prior[t];
        const double excursion =
            std::max(ratio - x, x == kInf ? -kInf : 1.0 / x - ratio);
        if (excursion > worst) {
          worst = excursion;
          witness.prior = prior;
          witness.outcome = Target::Label(key);
          witness.strategy = {t};
        }
      }
    }
  }
  AuditReport r;
  r.claim = "posterior";
  r.params = {{"n", static_cast<double>(others.size() + 1)},
              {"eps", target.epsilon()},
              {"grid_step", step},
              {"types", static_cast<double>(m)},
              {"slack", target.slack()}};
  r.quantity = "max excursion of posterior/prior outside [1/x, x]";
  r.measured = worst;
  r.relation = "<=";
  r.bound = tolerance;
  r.verdict = worst <= tolerance ? Verdict::kPass : Verdict::kFail;
  r.witness = witness;
  r.extras = {{"checks", static_cast<double>(checks)},
              {"zero_evidence_skipped", static_cast<double>(zero_evidence)},
              {"unbounded_outcomes", static_cast<double>(unbounded)},
              {"priors", static_cast<double>(grid.size())}};
  return r;
}

}  // namespace privmech

#endif  // PRIVMECH_AUDIT_HPP_
