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

// Goodness-of-fit helpers shared by the sampler tests and the acceptance
// binary.

#ifndef PRIVMECH_TESTS_SUPPORT_STATS_HPP_
#define PRIVMECH_TESTS_SUPPORT_STATS_HPP_

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <map>

#include <boost/math/distributions/chi_squared.hpp>

#include "privmech/noise.hpp"
#include "privmech/rng.hpp"

namespace privmech::testing {

struct GoodnessOfFit {
  double statistic = 0.0;
  std::size_t dof = 0;
  double p_value = 0.0;
  std::int64_t min_value = 0;  // smallest draw
};

// Pearson chi-square test of `draws` samples against the spec's pmf. Cells
// are single values with expected count >= 5, plus one pooled cell per tail.
inline GoodnessOfFit ChiSquareTest(const NoiseSpec& spec, std::uint64_t seed,
                                   std::size_t draws) {
  RngStream rng(seed);
  std::map<std::int64_t, std::size_t> counts;
  std::int64_t min_value = std::numeric_limits<std::int64_t>::max();
  for (std::size_t t = 0; t < draws; ++t) {
    const std::int64_t x = Sample(spec, rng);
    ++counts[x];
    min_value = std::min(min_value, x);
  }
  const double n = static_cast<double>(draws);
  std::int64_t hi = 0;
  while (n * Pmf(spec, hi + 1) >= 5.0) ++hi;
  const std::int64_t lo = spec.side() == NoiseSide::kOneSided ? 0 : -hi;

  double stat = 0.0;
  std::size_t cells = 0;
  auto add_cell = [&](double observed, double expected) {
    stat += (observed - expected) * (observed - expected) / expected;
    ++cells;
  };
  std::size_t inside = 0;
  for (std::int64_t k = lo; k <= hi; ++k) {
    const auto it = counts.find(k);
    const double obs = it == counts.end() ? 0.0 : static_cast<double>(it->second);
    inside += static_cast<std::size_t>(obs);
    add_cell(obs, n * Pmf(spec, k));
  }
  std::size_t above = 0;
  std::size_t below = 0;
  for (const auto& [k, c] : counts) {
    if (k > hi) above += c;
    if (k < lo) below += c;
  }
  add_cell(static_cast<double>(above), n * Survival(spec, hi));
  if (spec.side() == NoiseSide::kTwoSided) {
    add_cell(static_cast<double>(below), n * Cdf(spec, lo - 1));
  }
  GoodnessOfFit g;
  g.statistic = stat;
  g.dof = cells - 1;
  boost::math::chi_squared dist(static_cast<double>(g.dof));
  g.p_value = boost::math::cdf(boost::math::complement(dist, stat));
  g.min_value = min_value;
  return g;
}

}  // namespace privmech::testing

#endif  // PRIVMECH_TESTS_SUPPORT_STATS_HPP_
