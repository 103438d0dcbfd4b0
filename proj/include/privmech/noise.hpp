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

// Integer noise: the two-sided geometric (discrete Laplace) distribution with
// Pr[k] proportional to alpha^|k| over Z, and the one-sided geometric
// distribution with Pr[k] proportional to alpha^k over k >= 0. Masses and
// tails are closed-form; audits truncate to [-K, K] (or [0, K]) windows
// whose missing mass is bounded by TailBound.

#ifndef PRIVMECH_NOISE_HPP_
#define PRIVMECH_NOISE_HPP_

#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <limits>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "privmech/core.hpp"
#include "privmech/rng.hpp"

namespace privmech {

enum class NoiseSide { kTwoSided, kOneSided };

class NoiseSpec {
 public:
  // alpha = exp(-rate).
  static NoiseSpec TwoSided(double rate) {
    return NoiseSpec(NoiseSide::kTwoSided, rate);
  }
  static NoiseSpec OneSided(double rate) {
    return NoiseSpec(NoiseSide::kOneSided, rate);
  }

  NoiseSide side() const { return side_; }
  double rate() const { return rate_; }
  double alpha() const { return std::exp(-rate_); }
  // ln(1 - alpha) and ln(1 + alpha).
  double log_one_minus_alpha() const { return std::log(-std::expm1(-rate_)); }
  double log_one_plus_alpha() const { return std::log1p(std::exp(-rate_)); }

 private:
  NoiseSpec(NoiseSide side, double rate) : side_(side), rate_(rate) {
    if (!(rate > 0.0) || !std::isfinite(rate)) {
      throw std::domain_error("noise decay rate must be finite and > 0");
    }
  }

  NoiseSide side_;
  double rate_;
};

// r with Pr[r = k] proportional to exp(-epsilon |k|).
inline NoiseSpec ElectionNoise(double epsilon) {
  return NoiseSpec::TwoSided(epsilon);
}

// r_j >= 0 with Pr[r_j = k] proportional to exp(-epsilon k / 2).
inline NoiseSpec FacilityNoise(double epsilon) {
  return NoiseSpec::OneSided(epsilon / 2.0);
}

// lambda_o with Pr[lambda_o = k] proportional to exp(-epsilon |k| / (M |O|)).
inline NoiseSpec VcgNoise(double epsilon, int max_utility,
                          std::size_t num_outcomes) {
  return NoiseSpec::TwoSided(
      epsilon / (static_cast<double>(max_utility) *
                 static_cast<double>(num_outcomes)));
}

inline double LogPmf(const NoiseSpec& spec, std::int64_t k) {
  if (spec.side() == NoiseSide::kOneSided) {
    if (k < 0) return -std::numeric_limits<double>::infinity();
    return -spec.rate() * static_cast<double>(k) + spec.log_one_minus_alpha();
  }
  return -spec.rate() * static_cast<double>(k < 0 ? -k : k) +
         spec.log_one_minus_alpha() - spec.log_one_plus_alpha();
}

inline double Pmf(const NoiseSpec& spec, std::int64_t k) {
  return std::exp(LogPmf(spec, k));
}

// Pr[noise > k], evaluated without cancellation where it is small.
inline double Survival(const NoiseSpec& spec, std::int64_t k) {
  const double rate = spec.rate();
  if (spec.side() == NoiseSide::kOneSided) {
    if (k < 0) return 1.0;
    return std::exp(-rate * static_cast<double>(k + 1));
  }
  if (k >= 0) {
    return std::exp(-rate * static_cast<double>(k + 1) -
                    spec.log_one_plus_alpha());
  }
  return -std::expm1(-rate * static_cast<double>(-k) -
                     spec.log_one_plus_alpha());
}

// Pr[noise <= k].
inline double Cdf(const NoiseSpec& spec, std::int64_t k) {
  const double rate = spec.rate();
  if (spec.side() == NoiseSide::kOneSided) {
    if (k < 0) return 0.0;
    return -std::expm1(-rate * static_cast<double>(k + 1));
  }
  if (k < 0) {
    return std::exp(-rate * static_cast<double>(-k) -
                    spec.log_one_plus_alpha());
  }
  return -std::expm1(-rate * static_cast<double>(k + 1) -
                     spec.log_one_plus_alpha());
}

// ln Pr[noise <= k] and ln Pr[noise > k] for the two-sided spec.
inline double LogCdf(const NoiseSpec& spec, std::int64_t k) {
  if (spec.side() == NoiseSide::kTwoSided && k < 0) {
    return -spec.rate() * static_cast<double>(-k) - spec.log_one_plus_alpha();
  }
  return std::log(Cdf(spec, k));
}

inline double LogSurvival(const NoiseSpec& spec, std::int64_t k) {
  if (k >= 0) {
    double log_s = -spec.rate() * static_cast<double>(k + 1);
    if (spec.side() == NoiseSide::kTwoSided) log_s -= spec.log_one_plus_alpha();
    return log_s;
  }
  return std::log(Survival(spec, k));
}

// Number of failures before the first success of a Bernoulli(1 - alpha)
// sequence, by inversion: Pr[m >= t] = alpha^t.
inline std::int64_t SampleGeometric(double rate, RngStream& rng) {
  const double u = rng.NextOpenUnit();
  return static_cast<std::int64_t>(std::floor(-std::log(u) / rate));
}

// Two-sided draws place the zero atom (1 - alpha) / (1 + alpha) first and
// then a symmetric sign with magnitude 1 + Geometric(alpha).
inline std::int64_t Sample(const NoiseSpec& spec, RngStream& rng) {
  if (spec.side() == NoiseSide::kOneSided) {
    return SampleGeometric(spec.rate(), rng);
  }
  const double zero_mass =
      std::exp(spec.log_one_minus_alpha() - spec.log_one_plus_alpha());
  if (rng.NextUnit() < zero_mass) return 0;
  const std::int64_t magnitude = 1 + SampleGeometric(spec.rate(), rng);
  return rng.NextBit() ? magnitude : -magnitude;
}

// Truncation of a product of `coordinates` noise draws to [-bound, bound]
// (or [0, bound]); tail_mass bounds the probability that any coordinate
// falls outside.
struct TruncationWindow {
  std::int64_t bound = 0;
  std::size_t coordinates = 1;
  double tail_mass = 0.0;

  // Noise values per coordinate.
  std::int64_t Width(const NoiseSpec& spec) const {
    return spec.side() == NoiseSide::kOneSided ? bound + 1 : 2 * bound + 1;
  }
  std::int64_t Lowest(const NoiseSpec& spec) const {
    return spec.side() == NoiseSide::kOneSided ? 0 : -bound;
  }
};

// Probability that one coordinate leaves the window.
inline double SingleCoordinateTail(const NoiseSpec& spec, std::int64_t bound) {
  if (spec.side() == NoiseSide::kOneSided) return Survival(spec, bound);
  return 2.0 * Survival(spec, bound);
}

inline TruncationWindow TailBound(const NoiseSpec& spec, std::int64_t bound,
                                  std::size_t coordinates) {
  if (bound < 0) throw std::domain_error("window bound must be >= 0");
  if (coordinates < 1) throw std::domain_error("need at least one coordinate");
  TruncationWindow w;
  w.bound = bound;
  w.coordinates = coordinates;
  w.tail_mass =
      static_cast<double>(coordinates) * SingleCoordinateTail(spec, bound);
  if (!(w.tail_mass < 1.0)) {
    throw std::domain_error("window too narrow: tail mass bound >= 1");
  }
  return w;
}

// 1 - Pr[all coordinates inside the window].
inline double ExactOutOfWindowMass(const NoiseSpec& spec, std::int64_t bound,
                                   std::size_t coordinates) {
  const double single = SingleCoordinateTail(spec, bound);
  return -std::expm1(static_cast<double>(coordinates) * std::log1p(-single));
}

// Smallest window whose certified tail mass is at most `slack`.
inline TruncationWindow WindowForSlack(const NoiseSpec& spec,
                                       std::size_t coordinates,
                                       double slack) {
  if (!(slack > 0.0 && slack < 1.0)) {
    throw std::domain_error("slack must lie in (0, 1)");
  }
  const double scale =
      static_cast<double>(coordinates) *
      (spec.side() == NoiseSide::kOneSided
           ? 1.0
           : 2.0 * std::exp(-spec.log_one_plus_alpha()));
  double guess = std::ceil(-std::log(slack / scale) / spec.rate()) - 1.0;
  std::int64_t bound = guess > 0.0 ? static_cast<std::int64_t>(guess) : 0;
  while (bound > 0 && static_cast<double>(coordinates) *
                              SingleCoordinateTail(spec, bound - 1) <=
                          slack) {
    --bound;
  }
  while (static_cast<double>(coordinates) * SingleCoordinateTail(spec, bound) >
         slack) {
    ++bound;
  }
  return TailBound(spec, bound, coordinates);
}

// Cap on the number of points any single exact enumeration may visit. Read
// from PRIVMECH_BUDGET when set.
inline double EnumerationBudget() {
  constexpr double kDefaultBudget = 2e9;
  if (const char* env = std::getenv("PRIVMECH_BUDGET")) {
    char* end = nullptr;
    const double v = std::strtod(env, &end);
    if (end != env && v > 0.0) return v;
  }
  return kDefaultBudget;
}

inline void CheckEnumerationBudget(double points, std::string_view what) {
  if (points > EnumerationBudget()) {
    throw ResourceError(std::string(what) + ": enumeration of " +
                        std::to_string(points) +
                        " points exceeds the budget (PRIVMECH_BUDGET)");
  }
}

// Calls f(noise, probability) for every point of the truncated product
// window, lexicographically.
template <typename F>
void ForEachNoiseVector(const NoiseSpec& spec, const TruncationWindow& window,
                        F&& f) {
  const std::int64_t width = window.Width(spec);
  CheckEnumerationBudget(
      std::pow(static_cast<double>(width),
               static_cast<double>(window.coordinates)),
      "noise window");
  const std::int64_t lowest = window.Lowest(spec);
  std::vector<double> mass(static_cast<std::size_t>(width));
  for (std::int64_t k = 0; k < width; ++k) {
    mass[static_cast<std::size_t>(k)] = Pmf(spec, lowest + k);
  }
  std::vector<std::int64_t> noise(window.coordinates, lowest);
  std::vector<double> partial(window.coordinates + 1, 1.0);
  for (std::size_t c = 0; c < window.coordinates; ++c) {
    partial[c + 1] = partial[c] * mass[0];
  }
  while (true) {
    f(std::as_const(noise), partial[window.coordinates]);
    std::size_t pos = window.coordinates;
    while (true) {
      if (pos == 0) return;
      --pos;
      if (++noise[pos] < lowest + width) break;
      noise[pos] = lowest;
    }
    for (std::size_t c = pos; c < window.coordinates; ++c) {
      partial[c + 1] =
          partial[c] * mass[static_cast<std::size_t>(noise[c] - lowest)];
    }
  }
}

// Two-sided product noise over a window, reduced modulo adding a common
// constant to every coordinate. For functions of the noise that are
// invariant under such shifts (argmax and value gaps), summing over the
// reduced points gives exactly the window sum at a fraction of the cost.
// Each point fixes the last coordinate at 0.
class ShiftReducedNoise {
 public:
  ShiftReducedNoise(const NoiseSpec& spec, const TruncationWindow& window)
      : window_(window) {
    if (spec.side() != NoiseSide::kTwoSided) {
      throw std::domain_error("shift reduction needs two-sided noise");
    }
    const std::int64_t k = window.bound;
    dims_ = window.coordinates - 1;
    span_ = 4 * k + 1;
    const double points =
        std::pow(static_cast<double>(span_), static_cast<double>(dims_));
    CheckEnumerationBudget(points * static_cast<double>(2 * k + 1),
                           "shift-reduced noise table");
    std::vector<double> mass(static_cast<std::size_t>(2 * k + 1));
    for (std::int64_t t = -k; t <= k; ++t) {
      mass[static_cast<std::size_t>(t + k)] = Pmf(spec, t);
    }
    weights_.assign(static_cast<std::size_t>(points), 0.0);
    std::vector<std::int64_t> diff(dims_, -2 * k);
    for (std::size_t cell = 0; cell < weights_.size(); ++cell) {
      std::int64_t lo_d = 0;
      std::int64_t hi_d = 0;
      for (std::int64_t d : diff) {
        lo_d = std::min(lo_d, d);
        hi_d = std::max(hi_d, d);
      }
      CompensatedSum sum;
      for (std::int64_t t = -k - lo_d; t <= k - hi_d; ++t) {
        double w = mass[static_cast<std::size_t>(t + k)];
        for (std::int64_t d : diff) w *= mass[static_cast<std::size_t>(t + d + k)];
        sum.Add(w);
      }
      weights_[cell] = sum.Value();
      for (std::size_t pos = dims_; pos > 0; --pos) {
        if (++diff[pos - 1] <= 2 * k) break;
        diff[pos - 1] = -2 * k;
      }
    }
  }

  const TruncationWindow& window() const { return window_; }
  std::size_t num_points() const { return weights_.size(); }

  double TotalMass() const {
    CompensatedSum sum;
    for (double w : weights_) sum.Add(w);
    return sum.Value();
  }

  // Calls f(noise, weight) for every reduced point with positive weight.
  template <typename F>
  void ForEach(F&& f) const {
    const std::int64_t k = window_.bound;
    std::vector<std::int64_t> noise(dims_ + 1, -2 * k);
    noise[dims_] = 0;
    for (std::size_t cell = 0; cell < weights_.size(); ++cell) {
      if (weights_[cell] > 0.0) f(std::as_const(noise), weights_[cell]);
      for (std::size_t pos = dims_; pos > 0; --pos) {
        if (++noise[pos - 1] <= 2 * k) break;
        noise[pos - 1] = -2 * k;
      }
    }
  }

 private:
  TruncationWindow window_;
  std::size_t dims_ = 0;
  std::int64_t span_ = 1;
  std::vector<double> weights_;
};

}  // namespace privmech

#endif  // PRIVMECH_NOISE_HPP_
