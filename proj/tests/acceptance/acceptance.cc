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

// Acceptance run: one PASS/FAIL line per criterion. Exit status is nonzero
// when any criterion fails.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "privmech/privmech.hpp"
#include "support/stats.hpp"

namespace privmech {
namespace {

struct Result {
  bool ok = true;
  std::string detail;
};

// Collects sub-check results and the first few failures.
class Tally {
 public:
  void Check(bool ok, const std::string& what) {
    ++checks_;
    if (ok) return;
    ++failures_;
    if (failures_ <= 3) notes_ += (notes_.empty() ? "" : "; ") + what;
  }
  void Note(const std::string& s) { info_ += (info_.empty() ? "" : "; ") + s; }
  Result Done() const {
    std::ostringstream os;
    os << checks_ << " checks, " << failures_ << " failed";
    if (!info_.empty()) os << "; " << info_;
    if (!notes_.empty()) os << "; first failures: " << notes_;
    return {failures_ == 0, os.str()};
  }

 private:
  std::size_t checks_ = 0;
  std::size_t failures_ = 0;
  std::string notes_;
  std::string info_;
};

std::string Num(double x) {
  std::ostringstream os;
  os.precision(10);
  os << x;
  return os.str();
}

double Seconds(std::chrono::steady_clock::time_point start) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// 1. Election DP, add-remove equals eps and substitution equals 2 eps.
Result Criterion1() {
  const auto start = std::chrono::steady_clock::now();
  Tally t;
  for (double eps : {0.2, 0.5, 1.0}) {
    const ElectionTarget target(eps);
    for (std::size_t n = 1; n <= 7; ++n) {
      const double ar = DpAudit(target, NeighborModel::kAddRemove, n, eps).measured;
      t.Check(std::abs(ar - eps) <= 1e-9,
              "add-remove n=" + std::to_string(n) + " eps=" + Num(eps) + " got " + Num(ar));
      const double sub = DpAudit(target, NeighborModel::kSubstitution, n, 2 * eps).measured;
      t.Check(std::abs(sub - 2 * eps) <= 1e-9,
              "substitution n=" + std::to_string(n) + " eps=" + Num(eps) + " got " + Num(sub));
    }
  }
  const double secs = Seconds(start);
  t.Check(secs < 1.0, "runtime " + Num(secs) + " s");
  return t.Done();
}

// 2. Facility DP with certified windows.
Result Criterion2() {
  const auto start = std::chrono::steady_clock::now();
  Tally t;
  double worst_single = 0.0;
  double worst_sub = 0.0;
  for (double eps : {0.2, 0.5, 1.0}) {
    for (std::size_t q : {2u, 3u}) {
      const FacilityTarget target(LocationSet::Uniform(q), eps, 5e-7);
      const double s = target.slack();
      t.Check(s < 1e-6, "slack " + Num(s));
      for (std::size_t n = 1; n <= 5; ++n) {
        const std::string at = " q=" + std::to_string(q) + " n=" + std::to_string(n) +
                               " eps=" + Num(eps);
        const double single = DpAudit(target, NeighborModel::kAddRemove, n, eps / 2).measured;
        const double sub = DpAudit(target, NeighborModel::kSubstitution, n, eps).measured;
        worst_single = std::max(worst_single, single - eps / 2);
        worst_sub = std::max(worst_sub, sub - eps);
        t.Check(std::exp(single) <= std::exp(eps / 2) * (1 + 10 * s),
                "single-bin ratio" + at + " ln=" + Num(single));
        t.Check(std::exp(sub) <= std::exp(eps) * (1 + 10 * s),
                "substitution ratio" + at + " ln=" + Num(sub));
      }
    }
  }
  const double secs = Seconds(start);
  t.Note("max ln excess single-bin " + Num(worst_single) + ", substitution " + Num(worst_sub));
  t.Check(secs < 60.0, "runtime " + Num(secs) + " s");
  return t.Done();
}

// 3. VCG value tuple: per-unit log ratio at most eps/|O|.
Result Criterion3() {
  Tally t;
  for (double eps : {0.5, 1.0, 2.0}) {
    const VcgInstance inst(2, 1);
    const NoiseSpec spec = VcgNoise(eps, 1, 2);
    // Analytic: adjacent noise values differ by exactly the rate.
    t.Check(std::abs(spec.rate() - eps / 2) <= 1e-15, "rate eps=" + Num(eps));
    for (std::int64_t k = -50; k <= 50; ++k) {
      t.Check(std::abs(LogPmf(spec, k) - LogPmf(spec, k + 1)) <= eps / 2 + 1e-12,
              "adjacent ratio k=" + std::to_string(k));
    }
    const TruncationWindow w = WindowForSlack(spec, 2, 1e-9);
    for (std::size_t n = 1; n <= 2; ++n) {
      const AuditReport r = VcgValueTupleAudit(inst, eps, n, w);
      t.Check(r.measured <= eps / 2 + 1e-12,
              "per-unit n=" + std::to_string(n) + " eps=" + Num(eps) + " got " + Num(r.measured));
      t.Check(r.extras.at("tuple_max_log_ratio") <= eps + 1e-12, "tuple ratio");
    }
    const VcgTarget target(inst, eps, 1e-9);
    const AuditReport out = DpAudit(target, NeighborModel::kSubstitution, 2, eps);
    t.Note("output eps_eff at eps=" + Num(eps) + ": " + Num(out.measured));
  }
  return t.Done();
}

// Shared by criteria 4 and 10.
struct ElectionInstance {
  std::size_t n;
  double eps;
  double nu;
  double gap;
};

std::vector<ElectionInstance> PassingElectionInstances;

// 4. Election universal truthfulness.
Result Criterion4() {
  Tally t;
  std::size_t applicable = 0;
  for (double eps : {0.2, 0.5, 1.0}) {
    const ElectionTarget probe(eps);
    const TruncationWindow w = WindowForSlack(probe.noise(), 1, 5e-10);
    for (std::size_t n = 1; n <= 7; ++n) {
      const double eps_eff =
          DpAudit(probe, NeighborModel::kSubstitution, n, 2 * eps).measured;
      for (double nu : {0.0, 0.05, 0.1, 0.25, 0.5}) {
        for (double gap : {0.25, 0.5, 1.0, 2.0}) {
          const ElectionTarget target(eps, gap);
          const PrivacyModel f = PrivacyModel::LogLinear(nu);
          const AuditReport r = UniversalTruthfulnessAudit(target, f, eps_eff, n, w);
          const std::string at = "n=" + std::to_string(n) + " eps=" + Num(eps) +
                                 " nu=" + Num(nu) + " g=" + Num(gap);
          t.Check(r.extras.at("nonpositive_gaps") == 0.0, "nonpositive gap " + at);
          if (gap < 2 * nu * eps_eff) continue;
          ++applicable;
          t.Check(r.verdict == Verdict::kPass && r.extras.at("adversary_margin") >= -1e-9,
                  "violation " + at);
          if (r.verdict == Verdict::kPass) PassingElectionInstances.push_back({n, eps, nu, gap});
        }
      }
    }
  }
  t.Note(std::to_string(applicable) + " instances with g >= 2 nu eps_eff");
  return t.Done();
}

// 5. Facility universal truthfulness and IR.
Result Criterion5() {
  Tally t;
  const double eps = 1.0;
  std::size_t changes = 0;
  for (std::size_t q = 2; q <= 4; ++q) {
    const LocationSet locations = LocationSet::Uniform(q);
    const double spacing = 1.0 / static_cast<double>(q - 1);
    const FacilityTarget target(locations, eps, 1e-9);
    const TruncationWindow w = TailBound(target.noise(), 4, q);
    for (std::size_t n = 1; n <= 5; ++n) {
      const std::string at = "q=" + std::to_string(q) + " n=" + std::to_string(n);
      const AuditReport base =
          UniversalTruthfulnessAudit(target, PrivacyModel::LogLinear(0.0), eps, n, w);
      changes += static_cast<std::size_t>(base.extras.at("outcome_changes"));
      t.Check(base.extras.at("nonpositive_gaps") == 0.0, "median not moved away " + at);
      t.Check(base.verdict == Verdict::kPass, "nu=0 " + at);
      for (double frac : {0.5, 1.0}) {
        // spacing >= 2 F(e^eps) with F = nu ln x.
        const PrivacyModel f = PrivacyModel::LogLinear(frac * spacing / (2 * eps));
        const AuditReport r = UniversalTruthfulnessAudit(target, f, eps, n, w);
        t.Check(r.verdict == Verdict::kPass, "adversary " + at + " frac=" + Num(frac));
        t.Check(IrAudit(target, f, eps, n, w).verdict == Verdict::kPass,
                "ir " + at + " frac=" + Num(frac));
      }
    }
  }
  t.Note(std::to_string(changes) + " outcome-changing deviations at nu=0");
  return t.Done();
}

// 6. VCG pointwise gain at least 1/|O| in exact arithmetic.
Result Criterion6() {
  const auto start = std::chrono::steady_clock::now();
  Tally t;
  for (std::size_t outcomes : {2u, 3u}) {
    for (int m : {1, 2}) {
      const VcgInstance inst(outcomes, m);
      for (std::size_t n = 1; n <= 2; ++n) {
        const AuditReport r = VcgPointwiseGainAudit(inst, n, 4);
        const std::string at = "|O|=" + std::to_string(outcomes) + " M=" + std::to_string(m) +
                               " n=" + std::to_string(n);
        const bool exact_ok = r.extras.count("min_gain_scaled") == 0 ||
                              r.extras.at("min_gain_scaled") >= 1.0;
        t.Check(r.verdict == Verdict::kPass && exact_ok, at + " min gain " + Num(r.measured));
        if (r.witness) {
          t.Check(ReplayVcgGainWitness(inst, *r.witness).ToDouble() == r.measured,
                  "witness replay " + at);
        }
      }
    }
  }
  const double secs = Seconds(start);
  t.Check(secs < 120.0, "runtime " + Num(secs) + " s");
  return t.Done();
}

struct VcgCase {
  std::size_t outcomes;
  int m;
  double eps;
};

const std::vector<VcgCase> kVcgSweep = [] {
  std::vector<VcgCase> v;
  for (std::size_t outcomes : {2u, 3u}) {
    for (int m : {1, 2}) {
      for (double eps : {0.5, 1.0}) v.push_back({outcomes, m, eps});
    }
  }
  return v;
}();

constexpr double kVcgSlack = 1e-6;

// 7. Payment information changes rarely compared with the winner.
Result Criterion7() {
  Tally t;
  double worst = -kInf;
  for (const VcgCase& c : kVcgSweep) {
    const VcgTarget target(VcgInstance(c.outcomes, c.m), c.eps, kVcgSlack);
    for (std::size_t n = 1; n <= 2; ++n) {
      const AuditReport r = VcgPaymentInfoAudit(target, n);
      worst = std::max(worst, r.measured);
      t.Check(r.measured <= 20 * target.slack(),
              "|O|=" + std::to_string(c.outcomes) + " M=" + std::to_string(c.m) +
                  " eps=" + Num(c.eps) + " n=" + std::to_string(n) + " got " + Num(r.measured));
    }
  }
  t.Note("max of lhs - rhs " + Num(worst));
  return t.Done();
}

// 8. VCG truthfulness in expectation where the condition holds.
Result Criterion8() {
  Tally t;
  double worst = kInf;
  for (const VcgCase& c : kVcgSweep) {
    const VcgTarget target(VcgInstance(c.outcomes, c.m), c.eps, kVcgSlack);
    const double o = static_cast<double>(c.outcomes);
    const double nu_max = 1.0 / (2 * c.eps * o * (1 + 2 * c.m * std::exp(c.eps / o)));
    for (double frac : {0.0, 0.5, 1.0}) {
      const PrivacyModel f = PrivacyModel::LogLinear(frac * nu_max);
      for (std::size_t n = 1; n <= 2; ++n) {
        const AuditReport r = VcgExpectationTruthfulnessAudit(target, f, c.eps, n);
        const std::string at = "|O|=" + std::to_string(c.outcomes) + " M=" +
                               std::to_string(c.m) + " eps=" + Num(c.eps) +
                               " n=" + std::to_string(n) + " frac=" + Num(frac);
        t.Check(r.extras.at("condition_holds") == 1.0, "condition " + at);
        worst = std::min(worst, r.measured);
        t.Check(r.measured >= -20 * target.slack(), "margin " + at + " got " + Num(r.measured));
      }
    }
  }
  t.Note("min margin " + Num(worst));
  return t.Done();
}

// 9. Efficiency closed forms.
Result Criterion9() {
  const auto start = std::chrono::steady_clock::now();
  Tally t;
  constexpr std::size_t kTrials = 100000;
  std::size_t mc_misses = 0;
  for (double eps : {0.1, 0.2, 0.5, 1.0, 2.0}) {
    const double alpha = std::exp(-eps);
    for (std::size_t margin = 1; margin <= 10; ++margin) {
      const std::string at = "D'=" + std::to_string(margin) + " eps=" + Num(eps);
      const double closed = margin * std::pow(alpha, static_cast<double>(margin)) / (1 + alpha);
      // B majority, where ties (going to A) count against the majority.
      const BenchResult b = ElectionWelfareBench(ElectionProfile(0, margin), eps, 10000, margin);
      const double exact_b = b.references.at("exact_loss");
      t.Check(std::abs(exact_b - closed) <= 1e-12 * closed, "closed form " + at);
      // A majority.
      const BenchResult a = ElectionWelfareBench(ElectionProfile(margin, 0), eps, 10000, margin);
      for (const BenchResult* r : {&a, &b}) {
        t.Check(r->references.at("exact_loss") < 1.0 / eps, "E[loss] < 1/eps " + at);
        for (const TailPoint& pt : r->tail) {
          if (pt.delta < 1.0) continue;
          t.Check(pt.reference < std::exp(-eps * pt.delta), "tail " + at);
        }
        if (!r->AllChecksHold()) ++mc_misses;
      }
    }
  }
  t.Check(mc_misses == 0, std::to_string(mc_misses) + " election MC disagreements");

  const double feps = 1.0;
  const BenchResult f = FacilityWelfareBench(LocationSet::Uniform(3), SkewedFacilityProfile(10, 3),
                                             feps, kTrials, 2024);
  const double mean = f.references.at("noise_sum_mean");
  const double se = f.references.at("noise_sum_se");
  const double paper = f.references.at("paper_noise_sum_mean");
  const double exact = f.references.at("exact_noise_sum_mean");
  t.Note("facility mean sum r_j " + Num(mean) + " (se " + Num(se) + ") vs q/(1-e^{-eps/2}) " +
         Num(paper) + ", q e^{-eps/2}/(1-e^{-eps/2}) " + Num(exact));
  t.Check(std::abs(mean - paper) <= 4 * se, "facility noise mean off by " + Num(mean - paper));

  const VcgInstance inst(3, 2);
  const BenchResult v = VcgWelfareBench(inst, SkewedVcgProfile(inst, 10), 1.0, kTrials, 77);
  for (const TailPoint& pt : v.tail) {
    t.Check(pt.empirical <= pt.bound, "vcg tail at " + Num(pt.delta));
  }
  const double secs = Seconds(start);
  t.Check(secs < 300.0, "runtime " + Num(secs) + " s");
  return t.Done();
}

double RandomJointMi(std::mt19937_64& gen, std::size_t nx, std::size_t ny, std::size_t nz,
                     double* mi_xz) {
  std::gamma_distribution<double> g(0.5, 1.0);
  auto simplex = [&](std::size_t k) {
    std::vector<double> p(k);
    double s = 0.0;
    for (double& x : p) s += (x = g(gen) + 1e-300);
    for (double& x : p) x /= s;
    return p;
  };
  const auto px = simplex(nx);
  std::vector<std::vector<double>> ch1(nx), ch2(ny);
  for (auto& r : ch1) r = simplex(ny);
  for (auto& r : ch2) r = simplex(nz);
  JointDistribution xy, xz;
  for (std::size_t x = 0; x < nx; ++x) {
    for (std::size_t y = 0; y < ny; ++y) {
      xy.Add(x, y, px[x] * ch1[x][y]);
      for (std::size_t z = 0; z < nz; ++z) xz.Add(x, z, px[x] * ch1[x][y] * ch2[y][z]);
    }
  }
  *mi_xz = MutualInformation(xz);
  return MutualInformation(xy);
}

// 10. Information identities and the Xiao criterion.
Result Criterion10() {
  Tally t;
  std::mt19937_64 gen(10);
  std::uniform_int_distribution<std::size_t> size(2, 4);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nx = size(gen), ny = size(gen), nz = size(gen);
    double ixz = 0.0;
    const double ixy = RandomJointMi(gen, nx, ny, nz, &ixz);
    t.Check(ixz <= ixy + 1e-9, "data processing trial " + std::to_string(trial));
    t.Check(ixz >= -1e-9, "MI >= 0 trial " + std::to_string(trial));
    std::vector<double> p(nx), q(nx);
    std::uniform_real_distribution<double> u(0.01, 1.0);
    double sp = 0, sq = 0;
    for (std::size_t k = 0; k < nx; ++k) {
      sp += (p[k] = u(gen));
      sq += (q[k] = u(gen));
    }
    for (std::size_t k = 0; k < nx; ++k) {
      p[k] /= sp;
      q[k] /= sq;
    }
    t.Check(KlDivergence(p, q) >= -1e-12, "KL >= 0 trial " + std::to_string(trial));
    t.Check(std::abs(KlDivergence(p, p)) <= 1e-12, "KL(p,p) trial " + std::to_string(trial));
  }
  for (std::size_t k = 1; k <= 8; ++k) {
    JointDistribution bij, ind;
    for (std::size_t x = 0; x < k; ++x) {
      bij.Add(x, (x + 1) % k, 1.0 / k);
      for (std::size_t y = 0; y < 3; ++y) ind.Add(x, y, (1.0 / k) * (y + 1) / 6.0);
    }
    t.Check(std::abs(MutualInformation(bij) - std::log(static_cast<double>(k))) <= 1e-9,
            "bijection k=" + std::to_string(k));
    t.Check(std::abs(MutualInformation(ind)) <= 1e-9, "independence k=" + std::to_string(k));
  }

  std::size_t audits = 0;
  const std::vector<std::vector<double>> priors{{0.5, 0.5}, {0.7, 0.3}, {0.3, 0.7}};
  for (const ElectionInstance& e : PassingElectionInstances) {
    const ElectionTarget target(e.eps, e.gap);
    for (const auto& [stat, others] : internal::OtherProfiles(target, e.n - 1)) {
      for (const auto& prior : priors) {
        ++audits;
        const AuditReport r = XiaoTruthfulnessAudit(target, prior, e.nu, others);
        t.Check(r.verdict == Verdict::kPass && r.extras.at("strategies") == 4.0,
                "xiao n=" + std::to_string(e.n) + " eps=" + Num(e.eps) + " nu=" + Num(e.nu) +
                    " g=" + Num(e.gap) + " margin " + Num(r.measured));
      }
    }
  }
  t.Check(!PassingElectionInstances.empty(), "no criterion-4 instances to check");
  t.Note(std::to_string(audits) + " Xiao audits");
  return t.Done();
}

// 11. Posterior bracket.
Result Criterion11() {
  Tally t;
  for (double eps : {0.5, 1.0}) {
    const ElectionTarget election(eps);
    const FacilityTarget facility(LocationSet::Uniform(3), eps, 1e-9);
    for (std::size_t n = 1; n <= 4; ++n) {
      for (const auto& [stat, others] : internal::OtherProfiles(election, n - 1)) {
        const AuditReport r = PosteriorBoundAudit(election, others, 0.1);
        t.Check(r.verdict == Verdict::kPass, "election " + ToString(others) + " " + Num(r.measured));
      }
      for (const auto& [stat, others] : internal::OtherProfiles(facility, n - 1)) {
        const AuditReport r = PosteriorBoundAudit(facility, others, 0.1);
        t.Check(r.verdict == Verdict::kPass, "facility " + ToString(others) + " " + Num(r.measured));
      }
    }
  }
  return t.Done();
}

// 12. Sampler fidelity.
Result Criterion12() {
  Tally t;
  const std::vector<std::pair<std::string, NoiseSpec>> specs{
      {"election eps=0.2", ElectionNoise(0.2)},
      {"election eps=1", ElectionNoise(1.0)},
      {"facility eps=1", FacilityNoise(1.0)},
      {"vcg eps=1 M=2 |O|=3", VcgNoise(1.0, 2, 3)}};
  std::uint64_t seed = 12;
  double min_p = 1.0;
  for (const auto& [name, spec] : specs) {
    const testing::GoodnessOfFit g = testing::ChiSquareTest(spec, seed++, 1000000);
    min_p = std::min(min_p, g.p_value);
    t.Check(g.p_value >= 0.001, name + " p=" + Num(g.p_value));
    if (spec.side() == NoiseSide::kOneSided) t.Check(g.min_value >= 0, name + " negative draw");
  }
  const double eps = 0.5;
  const ElectionMechanism mech(eps);
  const RngStream root(1212);
  constexpr std::size_t kRuns = 100000;
  for (const auto& [a, b] : std::vector<std::pair<std::size_t, std::size_t>>{
           {3, 0}, {2, 1}, {1, 1}, {1, 2}, {0, 4}}) {
    const TypeProfile p = ElectionProfile(a, b);
    RngStream rng = root.Substream(a * 10 + b);
    std::size_t wins = 0;
    for (std::size_t k = 0; k < kRuns; ++k) wins += mech.Run(p, rng) == Candidate::kA;
    const double prob = ElectionOutcomeDist(p, eps).Prob(Candidate::kA);
    const double sd = std::sqrt(prob * (1 - prob) / kRuns);
    t.Check(std::abs(static_cast<double>(wins) / kRuns - prob) <= 4 * sd,
            "election frequency " + std::to_string(a) + "A" + std::to_string(b) + "B");
  }
  t.Note("min chi-square p " + Num(min_p));
  return t.Done();
}

}  // namespace
}  // namespace privmech

int main() {
  using privmech::Result;
  // The |O| = 3, M = 2 coupled sweeps exceed the default enumeration budget.
  setenv("PRIVMECH_BUDGET", "1e11", 0);
  const std::vector<std::pair<const char*, std::function<Result()>>> criteria{
      {"election DP", privmech::Criterion1},
      {"facility DP", privmech::Criterion2},
      {"VCG value-tuple DP", privmech::Criterion3},
      {"election universal truthfulness", privmech::Criterion4},
      {"facility truthfulness and IR", privmech::Criterion5},
      {"VCG pointwise gain", privmech::Criterion6},
      {"VCG payment information", privmech::Criterion7},
      {"VCG truthfulness in expectation", privmech::Criterion8},
      {"efficiency closed forms", privmech::Criterion9},
      {"information identities and Xiao criterion", privmech::Criterion10},
      {"posterior bound", privmech::Criterion11},
      {"sampler fidelity", privmech::Criterion12}};
  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const auto start = std::chrono::steady_clock::now();
    Result out;
    try {
      out = criteria[k].second();
    } catch (const std::exception& e) {
      out = {false, std::string("exception: ") + e.what()};
    }
    const double secs = privmech::Seconds(start);
    std::printf("%s %zu %s (%s) [%.2f s]\n", out.ok ? "PASS" : "FAIL", k + 1,
                criteria[k].first, out.detail.c_str(), secs);
    std::fflush(stdout);
    if (!out.ok) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
