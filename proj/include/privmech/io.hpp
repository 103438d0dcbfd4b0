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

// JSON and CSV encodings of instances, audit reports and bench results.

#ifndef PRIVMECH_IO_HPP_
#define PRIVMECH_IO_HPP_

#include <charconv>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <fstream>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"
#include "privmech/audit.hpp"
#include "privmech/bench.hpp"
#include "privmech/core.hpp"
#include "privmech/mechanisms.hpp"

namespace privmech {

inline constexpr const char* kVersion = "0.1.0";

inline constexpr const char* kBenchCsvHeader =
    "mechanism,n,eps,trials,seed,mean_loss,ci99,bound,tail_json";

// Shortest decimal text that reads back to the same double.
inline std::string FormatDouble(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  if (res.ec != std::errc()) throw std::runtime_error("number formatting failed");
  return std::string(buf, res.ptr);
}

// JSON has no infinities; those become strings.
inline nlohmann::json JsonNumber(double x) {
  if (std::isfinite(x)) return x;
  return FormatDouble(x);
}

// ---------------------------------------------------------------------------
// Instances.
//
//   {"mechanism": "election", "profile": ["A", "B", null]}
//   {"mechanism": "facility", "locations": [0, 0.5, 1], "profile": [0, 2, null]}
//   {"mechanism": "vcg", "outcomes": 2, "max_utility": 1,
//    "profile": [[1, 0], [0, 1], null]}
//
// null (or "_") marks a non-participating player.

struct Instance {
  Mechanism mechanism = Mechanism::kElection;
  TypeProfile profile;
  std::optional<LocationSet> locations;
  std::optional<VcgInstance> vcg;
};

inline Mechanism ParseMechanism(const std::string& s) {
  if (s == "election") return Mechanism::kElection;
  if (s == "facility") return Mechanism::kFacility;
  if (s == "vcg") return Mechanism::kVcg;
  throw std::invalid_argument("unknown mechanism '" + s + "'");
}

inline bool IsAbstainJson(const nlohmann::json& j) {
  return j.is_null() || (j.is_string() && j.get<std::string>() == "_");
}

inline Instance ParseInstance(const nlohmann::json& j) {
  Instance inst;
  inst.mechanism = ParseMechanism(j.at("mechanism").get<std::string>());
  const nlohmann::json& profile = j.at("profile");
  if (!profile.is_array()) throw std::invalid_argument("profile must be an array");
  switch (inst.mechanism) {
    case Mechanism::kElection:
      for (const auto& e : profile) {
        if (IsAbstainJson(e)) {
          inst.profile.emplace_back(Abstain{});
          continue;
        }
        const std::string s = e.get<std::string>();
        if (s == "A") {
          inst.profile.emplace_back(Candidate::kA);
        } else if (s == "B") {
          inst.profile.emplace_back(Candidate::kB);
        } else {
          throw std::invalid_argument("election votes must be \"A\" or \"B\"");
        }
      }
      break;
    case Mechanism::kFacility: {
      inst.locations = LocationSet(j.at("locations").get<std::vector<double>>());
      for (const auto& e : profile) {
        if (IsAbstainJson(e)) {
          inst.profile.emplace_back(Abstain{});
          continue;
        }
        const auto idx = e.get<std::size_t>();
        if (idx >= inst.locations->size()) {
          throw std::invalid_argument("location index out of range");
        }
        inst.profile.emplace_back(LocationIndex{idx});
      }
      break;
    }
    case Mechanism::kVcg: {
      inst.vcg = VcgInstance(j.at("outcomes").get<std::size_t>(),
                             j.at("max_utility").get<int>());
      for (const auto& e : profile) {
        if (IsAbstainJson(e)) {
          inst.profile.emplace_back(Abstain{});
          continue;
        }
        UtilityRow row(e.get<std::vector<int>>(), inst.vcg->max_utility());
        inst.vcg->CheckRow(row);
        inst.profile.emplace_back(std::move(row));
      }
      break;
    }
  }
  return inst;
}

inline nlohmann::json ReadJsonFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open " + path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw std::invalid_argument(path + ": " + e.what());
  }
}

// ---------------------------------------------------------------------------
// Reports.

inline nlohmann::json ToJson(const Witness& w) {
  nlohmann::json j;
  j["player"] = w.player;
  nlohmann::json profile = nlohmann::json::array();
  for (const PlayerType& t : w.profile) profile.push_back(ToString(t));
  j["profile"] = profile;
  if (w.deviation) j["deviation"] = ToString(*w.deviation);
  if (!w.noise.empty()) j["noise"] = w.noise;
  if (!w.outcome.empty()) j["outcome"] = w.outcome;
  if (!w.prior.empty()) j["prior"] = w.prior;
  if (!w.strategy.empty()) j["strategy"] = w.strategy;
  return j;
}

inline nlohmann::json ToJson(const AuditReport& r) {
  nlohmann::json j;
  j["claim"] = r.claim;
  nlohmann::json params = nlohmann::json::object();
  for (const auto& [k, v] : r.params) params[k] = JsonNumber(v);
  j["params"] = params;
  j["quantity"] = r.quantity;
  j["measured"] = JsonNumber(r.measured);
  j["relation"] = r.relation;
  j["bound"] = JsonNumber(r.bound);
  j["verdict"] = ToString(r.verdict);
  j["witness"] = r.witness ? ToJson(*r.witness) : nlohmann::json(nullptr);
  nlohmann::json extras = nlohmann::json::object();
  for (const auto& [k, v] : r.extras) extras[k] = JsonNumber(v);
  j["extras"] = extras;
  return j;
}

inline nlohmann::json TailJson(const BenchResult& b) {
  nlohmann::json tail = nlohmann::json::array();
  for (const TailPoint& pt : b.tail) {
    tail.push_back({JsonNumber(pt.delta), JsonNumber(pt.empirical)});
  }
  return tail;
}

inline nlohmann::json ToJson(const BenchResult& b) {
  nlohmann::json j;
  j["mechanism"] = b.mechanism;
  j["n"] = b.n;
  if (b.q > 0) j["q"] = b.q;
  if (b.outcomes > 0) {
    j["outcomes"] = b.outcomes;
    j["max_utility"] = b.max_utility;
  }
  j["eps"] = b.epsilon;
  j["trials"] = b.trials;
  j["seed"] = b.seed;
  j["mean_loss"] = b.mean_loss;
  j["sd_loss"] = b.sd_loss;
  j["ci99"] = b.ci99;
  j["bound"] = JsonNumber(b.bound);
  nlohmann::json tail = nlohmann::json::array();
  for (const TailPoint& pt : b.tail) {
    tail.push_back({{"delta", pt.delta},
                    {"empirical", pt.empirical},
                    {"ci99", pt.ci99},
                    {"bound", JsonNumber(pt.bound)},
                    {"reference", JsonNumber(pt.reference)}});
  }
  j["tail"] = tail;
  nlohmann::json refs = nlohmann::json::object();
  for (const auto& [k, v] : b.references) refs[k] = JsonNumber(v);
  j["references"] = refs;
  nlohmann::json checks = nlohmann::json::array();
  for (const BenchCheck& c : b.checks) {
    checks.push_back({{"name", c.name},
                      {"measured", JsonNumber(c.measured)},
                      {"limit", JsonNumber(c.limit)},
                      {"holds", c.holds}});
  }
  j["checks"] = checks;
  return j;
}

inline std::string CsvQuote(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

inline std::string ToCsvRow(const BenchResult& b) {
  std::ostringstream os;
  os << b.mechanism << ',' << b.n << ',' << FormatDouble(b.epsilon) << ','
     << b.trials << ',' << b.seed << ',' << FormatDouble(b.mean_loss) << ','
     << FormatDouble(b.ci99) << ',' << FormatDouble(b.bound) << ','
     << CsvQuote(TailJson(b).dump());
  return os.str();
}

}  // namespace privmech

#endif  // PRIVMECH_IO_HPP_
