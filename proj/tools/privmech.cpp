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

// privmech: run the mechanisms, audit their claims, bench their welfare.
//
// Exit codes: 0 all checks pass, 1 a check failed, 2 usage or config
// error, 3 a check was inconclusive because of truncation slack.

#include <cstdint>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"
#include "privmech/io.hpp"
#include "privmech/privmech.hpp"

namespace {

using nlohmann::json;
using namespace privmech;

constexpr int kExitPass = 0;
constexpr int kExitFail = 1;
constexpr int kExitUsage = 2;
constexpr int kExitInconclusive = 3;

class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct Config {
  std::string command;
  std::string mech = "election";
  std::string claim;
  std::string instance;
  std::string votes;
  std::string reports;
  std::string rows;
  std::string neighbors = "substitution";
  std::string format = "json";
  std::string out;
  std::string n_grid;
  std::string schedule = "constant";
  std::optional<double> eps;
  std::optional<double> target_eps;
  double nu = 0.0;
  double gap = 1.0;
  double slack = 1e-6;
  double grid_step = 0.1;
  std::int64_t window = -1;
  std::size_t trials = 10000;
  std::uint64_t seed = 1;
  std::size_t n = 3;
  std::size_t q = 3;
  std::size_t outcomes = 2;
  int max_utility = 1;
  std::size_t theta_size = 2;

  json ToJson() const {
    json j;
    j["command"] = command;
    j["mech"] = mech;
    if (!claim.empty()) j["claim"] = claim;
    if (!instance.empty()) j["instance"] = instance;
    if (!votes.empty()) j["votes"] = votes;
    if (!reports.empty()) j["reports"] = reports;
    if (!rows.empty()) j["rows"] = rows;
    j["neighbors"] = neighbors;
    j["format"] = format;
    if (!out.empty()) j["out"] = out;
    if (!n_grid.empty()) j["n_grid"] = n_grid;
    j["schedule"] = schedule;
    j["eps"] = eps ? json(*eps) : json(nullptr);
    if (target_eps) j["target_eps"] = *target_eps;
    j["nu"] = nu;
    j["gap"] = gap;
    j["slack"] = slack;
    j["grid_step"] = grid_step;
    if (window >= 0) j["window"] = window;
    j["trials"] = trials;
    j["seed"] = seed;
    j["n"] = n;
    j["q"] = q;
    j["outcomes"] = outcomes;
    j["max_utility"] = max_utility;
    j["theta_size"] = theta_size;
    return j;
  }
};

// Copies config-file values into fields whose flag was not given.
void ApplyConfigFile(const std::string& path,
                     const std::map<std::string, CLI::Option*>& options) {
  const json file = ReadJsonFile(path);
  if (!file.is_object()) throw UsageError("config file must hold a JSON object");
  for (const auto& [raw_key, value] : file.items()) {
    std::string key = raw_key;
    for (char& c : key) {
      if (c == '_') c = '-';
    }
    auto it = options.find(key);
    if (it == options.end()) throw UsageError("unknown config key '" + raw_key + "'");
    if (it->second->count() > 0) continue;
    std::string text = value.is_string() ? value.get<std::string>() : value.dump();
    try {
      it->second->add_result(text);
      it->second->run_callback();
    } catch (const CLI::Error& e) {
      throw UsageError("config key '" + raw_key + "': " + e.what());
    }
  }
}

double RequireEps(const Config& cfg) {
  if (!cfg.eps) throw UsageError("--eps is required");
  if (!(*cfg.eps > 0.0)) throw UsageError("--eps must be > 0");
  return *cfg.eps;
}

void Validate(const Config& cfg) {
  if (cfg.mech != "election" && cfg.mech != "facility" && cfg.mech != "vcg") {
    throw UsageError("--mech must be election, facility or vcg");
  }
  if (cfg.format != "json" && cfg.format != "csv") {
    throw UsageError("--format must be json or csv");
  }
  if (!(cfg.slack > 0.0 && cfg.slack < 1.0)) throw UsageError("--slack must lie in (0, 1)");
  if (cfg.trials < 1) throw UsageError("--trials must be >= 1");
  if (cfg.nu < 0.0) throw UsageError("--nu must be >= 0");
  if (cfg.n < 1) throw UsageError("--n must be >= 1");
  if (cfg.q < 1) throw UsageError("--q must be >= 1");
  if (cfg.outcomes < 1) throw UsageError("--outcomes must be >= 1");
  if (cfg.max_utility < 1) throw UsageError("--max-utility must be >= 1");
}

std::vector<std::string> Split(const std::string& s, char sep) {
  std::vector<std::string> parts;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, sep)) parts.push_back(item);
  return parts;
}

// Instance from --instance, or from --votes / --reports / --rows.
Instance LoadInstance(const Config& cfg) {
  if (!cfg.instance.empty()) {
    Instance inst = ParseInstance(ReadJsonFile(cfg.instance));
    if (ToString(inst.mechanism) != cfg.mech) {
      throw UsageError("instance mechanism differs from --mech");
    }
    return inst;
  }
  json j;
  j["mechanism"] = cfg.mech;
  json profile = json::array();
  if (cfg.mech == "election") {
    if (cfg.votes.empty()) throw UsageError("election needs --votes or --instance");
    for (char c : cfg.votes) {
      if (c == '_') {
        profile.push_back(nullptr);
      } else {
        profile.push_back(std::string(1, c));
      }
    }
  } else if (cfg.mech == "facility") {
    if (cfg.reports.empty()) throw UsageError("facility needs --reports or --instance");
    j["locations"] = LocationSet::Uniform(cfg.q).values();
    for (const std::string& r : Split(cfg.reports, ',')) {
      if (r == "_") {
        profile.push_back(nullptr);
      } else {
        profile.push_back(std::stoul(r));
      }
    }
  } else {
    if (cfg.rows.empty()) throw UsageError("vcg needs --rows or --instance");
    j["outcomes"] = cfg.outcomes;
    j["max_utility"] = cfg.max_utility;
    for (const std::string& r : Split(cfg.rows, ';')) {
      if (r == "_") {
        profile.push_back(nullptr);
        continue;
      }
      json row = json::array();
      for (const std::string& v : Split(r, ',')) row.push_back(std::stoi(v));
      profile.push_back(row);
    }
  }
  j["profile"] = profile;
  try {
    return ParseInstance(j);
  } catch (const std::exception& e) {
    throw UsageError(e.what());
  }
}

void Emit(const Config& cfg, const std::string& text) {
  if (cfg.out.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream f(cfg.out, std::ios::binary);
  if (!f) throw UsageError("cannot write " + cfg.out);
  f << text;
}

std::string ConfigComment(const Config& cfg) {
  json c = cfg.ToJson();
  c["version"] = kVersion;
  return "# config: " + c.dump() + "\n";
}

json Envelope(const Config& cfg) {
  json j;
  j["version"] = kVersion;
  j["config"] = cfg.ToJson();
  return j;
}

// ---------------------------------------------------------------------------
// run

int CmdRun(const Config& cfg) {
  const double eps = RequireEps(cfg);
  const Instance inst = LoadInstance(cfg);
  RngStream rng(cfg.seed);
  json j = Envelope(cfg);
  j["seed"] = cfg.seed;
  std::vector<std::string> csv_cols{"mechanism", "seed", "winner"};
  std::vector<std::string> csv_vals{cfg.mech, std::to_string(cfg.seed)};
  switch (inst.mechanism) {
    case Mechanism::kElection: {
      const Candidate w = ElectionMechanism(eps).Run(inst.profile, rng);
      j["winner"] = ToString(w);
      csv_vals.push_back(ToString(w));
      break;
    }
    case Mechanism::kFacility: {
      const FacilityMechanism mech(*inst.locations, eps);
      const LocationIndex w = mech.Run(inst.profile, rng);
      j["winner"] = w.value;
      j["location"] = inst.locations->at(w);
      csv_vals.push_back(std::to_string(w.value));
      break;
    }
    case Mechanism::kVcg: {
      const VcgMechanism mech(*inst.vcg, eps);
      const VcgOutput out = mech.Run(inst.profile, rng);
      j["winner"] = out.winner.value;
      json info = json::array();
      for (const auto& e : out.info.entries()) {
        info.push_back({{"outcome", e.outcome.value},
                        {"gap", out.info.Gap(e).ToString()},
                        {"gap_value", out.info.Gap(e).ToDouble()}});
      }
      j["payment_info"] = info;
      json pays = json::array();
      std::string pay_text;
      for (const PlayerType& t : inst.profile) {
        const Rational p = VcgPayment(inst.vcg->RowOf(t), out);
        pays.push_back(p.ToString());
        pay_text += (pay_text.empty() ? "" : " ") + p.ToString();
      }
      j["payments"] = pays;
      csv_vals.push_back(std::to_string(out.winner.value));
      csv_cols.push_back("payments");
      csv_vals.push_back(pay_text);
      break;
    }
  }
  if (cfg.format == "json") {
    Emit(cfg, j.dump(2) + "\n");
  } else {
    std::string text;
    for (std::size_t k = 0; k < csv_cols.size(); ++k) {
      text += (k ? "," : "") + csv_cols[k];
    }
    text += "\n";
    for (std::size_t k = 0; k < csv_vals.size(); ++k) {
      text += (k ? "," : "") + CsvQuote(csv_vals[k]);
    }
    Emit(cfg, text + "\n" + ConfigComment(cfg));
  }
  return kExitPass;
}

// ---------------------------------------------------------------------------
// audit

NeighborModel ParseNeighbors(const std::string& s) {
  if (s == "substitution") return NeighborModel::kSubstitution;
  if (s == "add-remove") return NeighborModel::kAddRemove;
  throw UsageError("--neighbors must be substitution or add-remove");
}

// Worst report of a family: the worst verdict, then the extreme measured
// value in the claim's direction.
AuditReport WorstOf(std::vector<AuditReport> reports) {
  if (reports.empty()) throw std::logic_error("no reports");
  auto rank = [](Verdict v) {
    return v == Verdict::kFail ? 2 : v == Verdict::kInconclusive ? 1 : 0;
  };
  std::size_t best = 0;
  for (std::size_t k = 1; k < reports.size(); ++k) {
    const AuditReport& a = reports[k];
    const AuditReport& b = reports[best];
    const bool lower_is_worse = a.relation == ">=";
    const bool worse_measured =
        lower_is_worse ? a.measured < b.measured : a.measured > b.measured;
    if (rank(a.verdict) > rank(b.verdict) ||
        (rank(a.verdict) == rank(b.verdict) && worse_measured)) {
      best = k;
    }
  }
  AuditReport r = reports[best];
  r.extras["instances_audited"] = static_cast<double>(reports.size());
  return r;
}

std::vector<std::vector<double>> TestPriors(std::size_t m) {
  std::vector<double> uniform(m, 1.0 / static_cast<double>(m));
  std::vector<double> skewed(m, m > 1 ? 0.3 / static_cast<double>(m - 1) : 1.0);
  skewed[0] = m > 1 ? 0.7 : 1.0;
  return {uniform, skewed};
}

template <typename Target>
AuditReport XiaoOverOthers(const Target& target, std::size_t n, double nu) {
  const auto others = internal::OtherProfiles(target, n - 1);
  std::vector<AuditReport> reports;
  for (const auto& prior : TestPriors(target.Types().size())) {
    for (const auto& [stat, rest] : others) {
      reports.push_back(XiaoTruthfulnessAudit(target, prior, nu, rest));
    }
  }
  return WorstOf(std::move(reports));
}

template <typename Target>
AuditReport PosteriorOverOthers(const Target& target, std::size_t n, double step) {
  const auto others = internal::OtherProfiles(target, n - 1);
  std::vector<AuditReport> reports;
  for (const auto& [stat, rest] : others) {
    reports.push_back(PosteriorBoundAudit(target, rest, step));
  }
  return WorstOf(std::move(reports));
}

// The theorem audits take eps_eff from a substitution DP audit; that audit
// only supplies the constant and does not enter the verdict.
template <typename Target>
std::vector<AuditReport> PointwiseFamily(const Target& target, const Config& cfg,
                                         bool ir_only) {
  const AuditReport dp =
      DpAudit(target, NeighborModel::kSubstitution, cfg.n, target.epsilon());
  const double eps_eff = dp.measured;
  const PrivacyModel privacy = PrivacyModel::LogLinear(cfg.nu);
  const TruncationWindow window =
      cfg.window >= 0 ? TailBound(target.noise(), cfg.window, target.coordinates())
                      : WindowForSlack(target.noise(), target.coordinates(), cfg.slack);
  std::vector<AuditReport> out;
  if (!ir_only) {
    out.push_back(UniversalTruthfulnessAudit(target, privacy, eps_eff, cfg.n, window));
  }
  out.push_back(IrAudit(target, privacy, eps_eff, cfg.n, window));
  return out;
}

ElectionTarget MakeElection(const Config& cfg) {
  return ElectionTarget(RequireEps(cfg), cfg.gap);
}

FacilityTarget MakeFacility(const Config& cfg) {
  return FacilityTarget(LocationSet::Uniform(cfg.q), RequireEps(cfg), cfg.slack);
}

VcgTarget MakeVcg(const Config& cfg) {
  return VcgTarget(VcgInstance(cfg.outcomes, cfg.max_utility), RequireEps(cfg),
                   cfg.slack);
}

std::vector<AuditReport> RunAudits(const Config& cfg) {
  const std::string& c = cfg.claim;
  if (c == "dp") {
    const NeighborModel model = ParseNeighbors(cfg.neighbors);
    const double eps = RequireEps(cfg);
    const double target_eps = cfg.target_eps.value_or(eps);
    if (cfg.mech == "election") return {DpAudit(MakeElection(cfg), model, cfg.n, target_eps)};
    if (cfg.mech == "facility") return {DpAudit(MakeFacility(cfg), model, cfg.n, target_eps)};
    return {DpAudit(MakeVcg(cfg), model, cfg.n, target_eps)};
  }
  if (c == "thm-voting") return PointwiseFamily(MakeElection(cfg), cfg, false);
  if (c == "thm-facility") return PointwiseFamily(MakeFacility(cfg), cfg, false);
  if (c == "ir") {
    if (cfg.mech == "election") return PointwiseFamily(MakeElection(cfg), cfg, true);
    if (cfg.mech == "facility") return PointwiseFamily(MakeFacility(cfg), cfg, true);
    const VcgTarget t = MakeVcg(cfg);
    const AuditReport dp = DpAudit(t, NeighborModel::kSubstitution, cfg.n, t.epsilon());
    return {VcgExpectationTruthfulnessAudit(t, PrivacyModel::LogLinear(cfg.nu),
                                            dp.measured, cfg.n,
                                            DeviationSet::kAbstainOnly)};
  }
  if (c == "thm-vcg") {
    const VcgTarget t = MakeVcg(cfg);
    const AuditReport dp = DpAudit(t, NeighborModel::kSubstitution, cfg.n, t.epsilon());
    return {VcgExpectationTruthfulnessAudit(t, PrivacyModel::LogLinear(cfg.nu),
                                            dp.measured, cfg.n)};
  }
  if (c == "lem-vcg-outcome") {
    const VcgInstance instance(cfg.outcomes, cfg.max_utility);
    return {VcgPointwiseGainAudit(instance, cfg.n, cfg.window >= 0 ? cfg.window : 4)};
  }
  if (c == "lem-vcg-payments") return {VcgPaymentInfoAudit(MakeVcg(cfg), cfg.n)};
  if (c == "vcg-value-tuple") {
    const double eps = RequireEps(cfg);
    const VcgInstance instance(cfg.outcomes, cfg.max_utility);
    const NoiseSpec spec = VcgNoise(eps, cfg.max_utility, cfg.outcomes);
    const TruncationWindow window =
        cfg.window >= 0 ? TailBound(spec, cfg.window, cfg.outcomes)
                        : WindowForSlack(spec, cfg.outcomes, cfg.slack);
    return {VcgValueTupleAudit(instance, eps, cfg.n, window)};
  }
  if (c == "xiao") {
    if (cfg.mech == "election") {
      if (cfg.theta_size != 2) throw UsageError("election has --theta-size 2");
      return {XiaoOverOthers(MakeElection(cfg), cfg.n, cfg.nu)};
    }
    if (cfg.mech == "facility") {
      Config sized = cfg;
      sized.q = cfg.theta_size;
      return {XiaoOverOthers(MakeFacility(sized), cfg.n, cfg.nu)};
    }
    throw UsageError("xiao audits cover election and facility");
  }
  if (c == "posterior") {
    if (cfg.mech == "election") {
      return {PosteriorOverOthers(MakeElection(cfg), cfg.n, cfg.grid_step)};
    }
    if (cfg.mech == "facility") {
      return {PosteriorOverOthers(MakeFacility(cfg), cfg.n, cfg.grid_step)};
    }
    throw UsageError("posterior audits cover election and facility");
  }
  throw UsageError("unknown --claim '" + c + "'");
}

int CmdAudit(const Config& cfg) {
  if (cfg.claim.empty()) throw UsageError("--claim is required");
  if (cfg.claim != "lem-vcg-outcome") RequireEps(cfg);
  const std::vector<AuditReport> reports = RunAudits(cfg);
  Verdict worst = Verdict::kPass;
  for (const AuditReport& r : reports) worst = Worst(worst, r.verdict);
  if (cfg.format == "json") {
    json j = Envelope(cfg);
    json arr = json::array();
    for (const AuditReport& r : reports) arr.push_back(ToJson(r));
    j["reports"] = arr;
    j["verdict"] = ToString(worst);
    Emit(cfg, j.dump(2) + "\n");
  } else {
    std::string text = "claim,quantity,measured,relation,bound,verdict\n";
    for (const AuditReport& r : reports) {
      text += CsvQuote(r.claim) + "," + CsvQuote(r.quantity) + "," +
              FormatDouble(r.measured) + "," + r.relation + "," +
              FormatDouble(r.bound) + "," + ToString(r.verdict) + "\n";
    }
    Emit(cfg, text + ConfigComment(cfg));
  }
  switch (worst) {
    case Verdict::kPass:
      return kExitPass;
    case Verdict::kFail:
      return kExitFail;
    case Verdict::kInconclusive:
      return kExitInconclusive;
  }
  return kExitFail;
}

// ---------------------------------------------------------------------------
// bench

std::vector<std::size_t> ParseGrid(const std::string& s) {
  std::vector<std::size_t> grid;
  for (const std::string& part : Split(s, ',')) {
    std::size_t pos = 0;
    unsigned long long v = 0;
    try {
      v = std::stoull(part, &pos);
    } catch (const std::exception&) {
      throw UsageError("bad --n-grid entry '" + part + "'");
    }
    if (pos != part.size() || v < 1) throw UsageError("bad --n-grid entry '" + part + "'");
    grid.push_back(static_cast<std::size_t>(v));
  }
  if (grid.empty()) throw UsageError("--n-grid is empty");
  return grid;
}

int CmdBench(const Config& cfg) {
  const double eps = RequireEps(cfg);
  if (cfg.trials < kMinBenchTrials) throw UsageError("benches need --trials >= 1000");
  std::vector<BenchResult> rows;
  std::optional<SweepResult> sweep;
  if (!cfg.instance.empty() || !cfg.votes.empty() || !cfg.reports.empty() ||
      !cfg.rows.empty()) {
    const Instance inst = LoadInstance(cfg);
    switch (inst.mechanism) {
      case Mechanism::kElection:
        rows.push_back(ElectionWelfareBench(inst.profile, eps, cfg.trials, cfg.seed));
        break;
      case Mechanism::kFacility:
        rows.push_back(FacilityWelfareBench(*inst.locations, inst.profile, eps,
                                            cfg.trials, cfg.seed));
        break;
      case Mechanism::kVcg:
        rows.push_back(VcgWelfareBench(*inst.vcg, inst.profile, eps, cfg.trials,
                                       cfg.seed));
        break;
    }
  } else {
    const std::vector<std::size_t> grid =
        ParseGrid(cfg.n_grid.empty() ? std::to_string(cfg.n) : cfg.n_grid);
    EpsilonSchedule schedule;
    if (cfg.schedule == "constant") {
      schedule = EpsilonSchedule::kConstant;
    } else if (cfg.schedule == "inverse-sqrt") {
      schedule = EpsilonSchedule::kInverseSqrt;
    } else {
      throw UsageError("--schedule must be constant or inverse-sqrt");
    }
    Mechanism family = ParseMechanism(cfg.mech);
    sweep = WelfareScalingSweep(family, grid, eps, schedule, cfg.trials, cfg.seed,
                                cfg.q, cfg.outcomes, cfg.max_utility);
    rows = sweep->rows;
  }
  bool all_hold = true;
  for (const BenchResult& b : rows) all_hold = all_hold && b.AllChecksHold();
  if (sweep) all_hold = all_hold && sweep->trend_ok;

  if (cfg.format == "csv") {
    std::string text = std::string(kBenchCsvHeader) + "\n";
    for (const BenchResult& b : rows) text += ToCsvRow(b) + "\n";
    Emit(cfg, text + ConfigComment(cfg));
  } else {
    json j = Envelope(cfg);
    json arr = json::array();
    for (const BenchResult& b : rows) arr.push_back(ToJson(b));
    j["results"] = arr;
    if (sweep) {
      j["sweep"] = {{"loss_fraction", sweep->loss_fraction},
                    {"slope", sweep->slope},
                    {"trend_ok", sweep->trend_ok}};
    }
    j["all_checks_hold"] = all_hold;
    Emit(cfg, j.dump(2) + "\n");
  }
  return all_hold ? kExitPass : kExitFail;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"privmech: privacy-aware truthful mechanisms"};
  app.set_version_flag("--version", std::string(kVersion));
  app.require_subcommand(1);
  Config cfg;
  std::string config_path;
  std::map<std::string, CLI::Option*> options;

  auto add_common = [&](CLI::App* sub) {
    options["mech"] = sub->add_option("--mech", cfg.mech, "election, facility or vcg");
    options["eps"] = sub->add_option("--eps", cfg.eps, "privacy parameter epsilon");
    options["nu"] = sub->add_option("--nu", cfg.nu, "privacy coefficient of F(x) = nu ln x");
    options["slack"] = sub->add_option("--slack", cfg.slack, "truncation slack target");
    options["trials"] = sub->add_option("--trials", cfg.trials, "Monte Carlo trials");
    options["seed"] = sub->add_option("--seed", cfg.seed, "random seed");
    options["format"] = sub->add_option("--format", cfg.format, "json or csv");
    options["out"] = sub->add_option("--out", cfg.out, "output path (default stdout)");
    options["instance"] = sub->add_option("--instance", cfg.instance, "instance JSON file");
    options["votes"] = sub->add_option("--votes", cfg.votes, "election votes, e.g. AAB_");
    options["reports"] = sub->add_option("--reports", cfg.reports, "facility reports, e.g. 0,2,_");
    options["rows"] = sub->add_option("--rows", cfg.rows, "VCG rows, e.g. '1,0;0,1'");
    options["n"] = sub->add_option("--n", cfg.n, "number of players");
    options["q"] = sub->add_option("--q", cfg.q, "number of facility locations");
    options["outcomes"] = sub->add_option("--outcomes", cfg.outcomes, "VCG outcome count");
    options["max-utility"] = sub->add_option("--max-utility", cfg.max_utility, "VCG max utility M");
    options["gap"] = sub->add_option("--gap", cfg.gap, "election utility gap g");
    options["neighbors"] = sub->add_option("--neighbors", cfg.neighbors,
                                           "substitution or add-remove");
    options["target-eps"] = sub->add_option("--target-eps", cfg.target_eps,
                                            "epsilon a dp audit checks against");
    options["claim"] = sub->add_option("--claim", cfg.claim, "claim to audit");
    options["theta-size"] = sub->add_option("--theta-size", cfg.theta_size, "type count for xiao");
    options["grid-step"] = sub->add_option("--grid-step", cfg.grid_step, "prior grid step");
    options["window"] = sub->add_option("--window", cfg.window, "noise window bound K");
    options["n-grid"] = sub->add_option("--n-grid", cfg.n_grid, "comma-separated n values");
    options["schedule"] = sub->add_option("--schedule", cfg.schedule,
                                          "constant or inverse-sqrt");
    sub->add_option("--config", config_path, "JSON config file");
  };
  CLI::App* run = app.add_subcommand("run", "sample one mechanism output");
  CLI::App* audit = app.add_subcommand("audit", "audit a claim exhaustively");
  CLI::App* bench = app.add_subcommand("bench", "Monte Carlo welfare bench");
  for (CLI::App* sub : {run, audit, bench}) add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }
  CLI::App* chosen = run->parsed() ? run : audit->parsed() ? audit : bench;
  cfg.command = chosen->get_name();
  // Options were registered once per subcommand; keep the chosen ones.
  for (auto& [key, opt] : options) {
    opt = chosen->get_option_no_throw("--" + key);
  }

  try {
    if (!config_path.empty()) ApplyConfigFile(config_path, options);
    // Without an explicit --mech the instance file names the mechanism.
    if (!cfg.instance.empty() && options["mech"]->count() == 0) {
      cfg.mech = ReadJsonFile(cfg.instance).value("mechanism", cfg.mech);
    }
    Validate(cfg);
    if (chosen == run) return CmdRun(cfg);
    if (chosen == audit) return CmdAudit(cfg);
    return CmdBench(cfg);
  } catch (const UsageError& e) {
    std::cerr << "error: " << e.what() << "\n\n" << chosen->help();
    return kExitUsage;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ResourceError& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
}
