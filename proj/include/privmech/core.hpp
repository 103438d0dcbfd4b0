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

// Domain types shared by the election, facility-location and VCG mechanisms:
// player types, outcomes, histograms, utility specifications and
// privacy-bound functions.

#ifndef PRIVMECH_CORE_HPP_
#define PRIVMECH_CORE_HPP_

#include <algorithm>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <variant>
#include <vector>

namespace privmech {

// Raised when an exact enumeration would exceed the configured budget.
class ResourceError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Default tolerance for floating-point audit comparisons.
inline constexpr double kDefaultTolerance = 1e-9;

enum class Candidate : std::uint8_t { kA, kB };

inline Candidate Other(Candidate c) {
  return c == Candidate::kA ? Candidate::kB : Candidate::kA;
}

inline const char* ToString(Candidate c) {
  return c == Candidate::kA ? "A" : "B";
}

// The non-participation type.
struct Abstain {
  auto operator<=>(const Abstain&) const = default;
};

struct LocationIndex {
  std::size_t value = 0;
  auto operator<=>(const LocationIndex&) const = default;
};

struct OutcomeIndex {
  std::size_t value = 0;
  auto operator<=>(const OutcomeIndex&) const = default;
};

// Outcome utilities of one VCG player, one integer in [0, M] per outcome.
class UtilityRow {
 public:
  UtilityRow(std::vector<int> values, int max_utility)
      : values_(std::move(values)), max_utility_(max_utility) {
    if (values_.empty()) throw std::domain_error("utility row is empty");
    if (max_utility_ < 1) throw std::domain_error("max utility must be >= 1");
    for (int v : values_) {
      if (v < 0 || v > max_utility_) {
        throw std::domain_error("utility value outside [0, M]");
      }
    }
  }

  static UtilityRow Zero(std::size_t num_outcomes, int max_utility) {
    return UtilityRow(std::vector<int>(num_outcomes, 0), max_utility);
  }

  int operator[](std::size_t o) const { return values_.at(o); }
  std::size_t size() const { return values_.size(); }
  int max_utility() const { return max_utility_; }
  std::span<const int> values() const { return values_; }

  bool IsConstant() const {
    return std::all_of(values_.begin(), values_.end(),
                       [&](int v) { return v == values_.front(); });
  }

  auto operator<=>(const UtilityRow&) const = default;

 private:
  std::vector<int> values_;
  int max_utility_;
};

// All rows in {0..M}^num_outcomes in lexicographic order. The all-zero row
// doubles as the non-participation type of the VCG mechanism.
inline std::vector<UtilityRow> AllUtilityRows(std::size_t num_outcomes,
                                              int max_utility) {
  std::vector<UtilityRow> rows;
  std::vector<int> digits(num_outcomes, 0);
  while (true) {
    rows.emplace_back(digits, max_utility);
    std::size_t pos = num_outcomes;
    while (pos > 0) {
      --pos;
      if (digits[pos] < max_utility) {
        ++digits[pos];
        std::fill(digits.begin() + pos + 1, digits.end(), 0);
        break;
      }
      if (pos == 0) return rows;
    }
  }
}

using PlayerType = std::variant<Abstain, Candidate, LocationIndex, UtilityRow>;
using TypeProfile = std::vector<PlayerType>;
using Outcome = std::variant<Candidate, LocationIndex, OutcomeIndex>;

inline bool IsAbstain(const PlayerType& t) {
  return std::holds_alternative<Abstain>(t);
}

inline std::string ToString(const PlayerType& t);

// Sorted location list l_0 < l_1 < ... < l_{q-1} inside [0, 1].
class LocationSet {
 public:
  explicit LocationSet(std::vector<double> locations)
      : locations_(std::move(locations)) {
    if (locations_.empty()) throw std::domain_error("no locations");
    for (std::size_t j = 0; j < locations_.size(); ++j) {
      if (!(locations_[j] >= 0.0 && locations_[j] <= 1.0)) {
        throw std::domain_error("location outside [0, 1]");
      }
      if (j > 0 && !(locations_[j] > locations_[j - 1])) {
        throw std::domain_error("locations must be strictly increasing");
      }
    }
  }

  // q locations spaced evenly over [0, 1]; a single location sits at 0.5.
  static LocationSet Uniform(std::size_t q) {
    if (q == 0) throw std::domain_error("no locations");
    if (q == 1) return LocationSet({0.5});
    std::vector<double> l(q);
    for (std::size_t j = 0; j < q; ++j) {
      l[j] = static_cast<double>(j) / static_cast<double>(q - 1);
    }
    return LocationSet(std::move(l));
  }

  std::size_t size() const { return locations_.size(); }
  double operator[](std::size_t j) const { return locations_.at(j); }
  double at(LocationIndex j) const { return locations_.at(j.value); }
  std::span<const double> values() const { return locations_; }

  double MinSpacing() const {
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t j = 1; j < locations_.size(); ++j) {
      best = std::min(best, locations_[j] - locations_[j - 1]);
    }
    return best;
  }

 private:
  std::vector<double> locations_;
};

// Per-location report counts.
struct Histogram {
  std::vector<std::int64_t> counts;

  std::size_t size() const { return counts.size(); }
  std::int64_t Total() const {
    return std::accumulate(counts.begin(), counts.end(), std::int64_t{0});
  }
  auto operator<=>(const Histogram&) const = default;
};

inline Histogram BuildHistogram(std::span<const PlayerType> profile,
                                std::size_t num_locations) {
  Histogram h{std::vector<std::int64_t>(num_locations, 0)};
  for (const PlayerType& t : profile) {
    if (IsAbstain(t)) continue;
    const auto* loc = std::get_if<LocationIndex>(&t);
    if (loc == nullptr) {
      throw std::domain_error("facility profile holds a non-location type");
    }
    if (loc->value >= num_locations) {
      throw std::domain_error("location index out of range");
    }
    ++h.counts[loc->value];
  }
  return h;
}

// Smallest 0-based k with z_0 + ... + z_k >= z_{k+1} + ... + z_{q-1}.
inline std::size_t MedianIndex(std::span<const std::int64_t> z) {
  if (z.empty()) throw std::domain_error("median of an empty vector");
  std::int64_t total = 0;
  for (std::int64_t v : z) {
    if (v < 0) throw std::domain_error("negative histogram entry");
    total += v;
  }
  std::int64_t prefix = 0;
  for (std::size_t k = 0; k < z.size(); ++k) {
    prefix += z[k];
    if (2 * prefix >= total) return k;
  }
  return z.size() - 1;  // unreachable: the last prefix is the total
}

// Exact fraction with a positive denominator, kept in lowest terms.
class Rational {
 public:
  constexpr Rational() = default;
  Rational(std::int64_t num, std::int64_t den = 1) : num_(num), den_(den) {
    if (den_ == 0) throw std::domain_error("zero denominator");
    if (den_ < 0) {
      num_ = -num_;
      den_ = -den_;
    }
    const std::int64_t g = std::gcd(num_ < 0 ? -num_ : num_, den_);
    if (g > 1) {
      num_ /= g;
      den_ /= g;
    }
  }

  std::int64_t num() const { return num_; }
  std::int64_t den() const { return den_; }
  double ToDouble() const {
    return static_cast<double>(num_) / static_cast<double>(den_);
  }

  friend Rational operator+(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ + b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a, const Rational& b) {
    return Rational(a.num_ * b.den_ - b.num_ * a.den_, a.den_ * b.den_);
  }
  friend Rational operator-(const Rational& a) {
    return Rational(-a.num_, a.den_);
  }
  friend bool operator==(const Rational& a, const Rational& b) {
    return a.num_ == b.num_ && a.den_ == b.den_;
  }
  friend std::strong_ordering operator<=>(const Rational& a,
                                          const Rational& b) {
    return a.num_ * b.den_ <=> b.num_ * a.den_;
  }

  std::string ToString() const {
    return den_ == 1 ? std::to_string(num_)
                     : std::to_string(num_) + "/" + std::to_string(den_);
  }

 private:
  std::int64_t num_ = 0;
  std::int64_t den_ = 1;
};

// Privacy-bound function F: [1, inf) -> [0, inf] with F(1) = 0.
class PrivacyModel {
 public:
  enum class Kind { kLogLinear, kTable };

  // F(x) = nu * ln(x), nu in utility units per nat.
  static PrivacyModel LogLinear(double nu) {
    if (!(nu >= 0.0) || !std::isfinite(nu)) {
      throw std::domain_error("privacy coefficient must be finite and >= 0");
    }
    PrivacyModel m;
    m.kind_ = Kind::kLogLinear;
    m.nu_ = nu;
    return m;
  }

  // Monotone table starting at (1, 0). Between points F takes the value at
  // the next tabulated point; beyond the last point it is unbounded. Both
  // choices keep audits sound for any monotone F through the table.
  static PrivacyModel Table(std::vector<std::pair<double, double>> points) {
    if (points.empty() || points.front().first != 1.0 ||
        points.front().second != 0.0) {
      throw std::domain_error("privacy table must start at (1, 0)");
    }
    for (std::size_t k = 1; k < points.size(); ++k) {
      if (!(points[k].first > points[k - 1].first)) {
        throw std::domain_error("privacy table x values must increase");
      }
      if (!(points[k].second >= points[k - 1].second)) {
        throw std::domain_error("privacy table must be nondecreasing");
      }
    }
    PrivacyModel m;
    m.kind_ = Kind::kTable;
    m.table_ = std::move(points);
    return m;
  }

  Kind kind() const { return kind_; }
  double nu() const { return nu_; }
  const std::vector<std::pair<double, double>>& table() const {
    return table_;
  }

  double operator()(double x) const {
    if (!(x >= 1.0)) throw std::domain_error("privacy bound needs x >= 1");
    if (kind_ == Kind::kLogLinear) {
      if (nu_ == 0.0) return 0.0;
      return nu_ * std::log(x);
    }
    auto it = std::lower_bound(
        table_.begin(), table_.end(), x,
        [](const std::pair<double, double>& p, double v) {
          return p.first < v;
        });
    if (it == table_.end()) return std::numeric_limits<double>::infinity();
    return it->second;
  }

  // F(e^epsilon) evaluated without overflow for the log-linear kind.
  double AtExp(double epsilon) const {
    if (kind_ == Kind::kLogLinear) return nu_ == 0.0 ? 0.0 : nu_ * epsilon;
    return (*this)(std::exp(epsilon));
  }

 private:
  PrivacyModel() = default;

  Kind kind_ = Kind::kLogLinear;
  double nu_ = 0.0;
  std::vector<std::pair<double, double>> table_;
};

// Utility for the preferred candidate is `gap`, for the other one 0.
struct ElectionUtility {
  double gap = 1.0;
};

// Uo(theta, o) = -|l_theta - l_o|.
struct FacilityUtility {
  LocationSet locations;
};

// Uo(row, o) = row[o].
struct TableUtility {
  std::size_t num_outcomes = 0;
  int max_utility = 1;
};

using UtilitySpec = std::variant<ElectionUtility, FacilityUtility, TableUtility>;

inline double OutcomeUtility(const UtilitySpec& spec, const PlayerType& t,
                             const Outcome& o) {
  if (IsAbstain(t)) {
    if (const auto* table = std::get_if<TableUtility>(&spec)) {
      const auto* idx = std::get_if<OutcomeIndex>(&o);
      if (idx == nullptr || idx->value >= table->num_outcomes) {
        throw std::domain_error("outcome not in the table domain");
      }
    }
    return 0.0;
  }
  if (const auto* e = std::get_if<ElectionUtility>(&spec)) {
    if (!(e->gap > 0.0)) throw std::domain_error("election gap must be > 0");
    const auto* want = std::get_if<Candidate>(&t);
    const auto* got = std::get_if<Candidate>(&o);
    if (want == nullptr || got == nullptr) {
      throw std::domain_error("election utility needs candidate arguments");
    }
    return *want == *got ? e->gap : 0.0;
  }
  if (const auto* f = std::get_if<FacilityUtility>(&spec)) {
    const auto* from = std::get_if<LocationIndex>(&t);
    const auto* to = std::get_if<LocationIndex>(&o);
    if (from == nullptr || to == nullptr || from->value >= f->locations.size() ||
        to->value >= f->locations.size()) {
      throw std::domain_error("facility utility needs in-range locations");
    }
    return -std::abs(f->locations.at(*from) - f->locations.at(*to));
  }
  const auto& table = std::get<TableUtility>(spec);
  const auto* row = std::get_if<UtilityRow>(&t);
  const auto* idx = std::get_if<OutcomeIndex>(&o);
  if (row == nullptr || idx == nullptr || idx->value >= table.num_outcomes ||
      row->size() != table.num_outcomes) {
    throw std::domain_error("table utility needs a row and an outcome index");
  }
  return (*row)[idx->value];
}

inline std::string ToString(const PlayerType& t) {
  struct Visitor {
    std::string operator()(const Abstain&) const { return "_"; }
    std::string operator()(Candidate c) const { return ToString(c); }
    std::string operator()(const LocationIndex& l) const {
      return "l" + std::to_string(l.value);
    }
    std::string operator()(const UtilityRow& r) const {
      std::string s = "[";
      for (std::size_t o = 0; o < r.size(); ++o) {
        if (o > 0) s += ",";
        s += std::to_string(r[o]);
      }
      return s + "]";
    }
  };
  return std::visit(Visitor{}, t);
}

inline std::string ToString(const TypeProfile& profile) {
  std::string s;
  for (std::size_t i = 0; i < profile.size(); ++i) {
    if (i > 0) s += " ";
    s += ToString(profile[i]);
  }
  return s;
}

// A computed quantity whose exact value lies within value +/- slack.
struct BoundedValue {
  double value = 0.0;
  double slack = 0.0;

  double lower() const { return value - slack; }
  double upper() const { return value + slack; }
};

// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void Add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      compensation_ += (sum_ - t) + x;
    } else {
      compensation_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  double Value() const { return sum_ + compensation_; }

 private:
  double sum_ = 0.0;
  double compensation_ = 0.0;
};

inline double LogAddExp(double a, double b) {
  if (a == -std::numeric_limits<double>::infinity()) return b;
  if (b == -std::numeric_limits<double>::infinity()) return a;
  const double hi = std::max(a, b);
  return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

// Calls f(profile) for every vector in values^length, lexicographically.
template <typename T, typename F>
void ForEachTuple(const std::vector<T>& values, std::size_t length, F&& f) {
  if (length == 0) {
    const std::vector<T> empty;
    f(empty);
    return;
  }
  if (values.empty()) return;
  std::vector<std::size_t> idx(length, 0);
  std::vector<T> tuple(length, values.front());
  while (true) {
    for (std::size_t k = 0; k < length; ++k) tuple[k] = values[idx[k]];
    f(std::as_const(tuple));
    std::size_t pos = length;
    bool done = true;
    while (pos > 0) {
      --pos;
      if (++idx[pos] < values.size()) {
        done = false;
        break;
      }
      idx[pos] = 0;
    }
    if (done) return;
  }
}

}  // namespace privmech

#endif  // PRIVMECH_CORE_HPP_
