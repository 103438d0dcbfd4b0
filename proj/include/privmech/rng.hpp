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

#ifndef PRIVMECH_RNG_HPP_
#define PRIVMECH_RNG_HPP_

#include <cstdint>
#include <limits>
#include <random>

namespace privmech {

// Seeded, splittable pseudorandom stream. Substream(k) of a given stream is
// a fixed function of (seed, path), so trials can be handed disjoint,
// reproducible streams regardless of scheduling. Not for cryptographic use.
class RngStream {
 public:
  using result_type = std::uint64_t;

  explicit RngStream(std::uint64_t seed) : RngStream(seed, Mix(seed)) {}

  RngStream Substream(std::uint64_t index) const {
    return RngStream(seed_, Mix(key_ ^ Mix(index + 0x9e3779b97f4a7c15ULL)));
  }

  std::uint64_t seed() const { return seed_; }

  result_type operator()() { return engine_(); }
  static constexpr result_type min() { return 0; }
  static constexpr result_type max() {
    return std::numeric_limits<result_type>::max();
  }

  // Uniform on [0, 1) with 53 random bits.
  double NextUnit() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform on (0, 1].
  double NextOpenUnit() {
    return static_cast<double>((engine_() >> 11) + 1) * 0x1.0p-53;
  }

  bool NextBit() { return (engine_() >> 63) != 0; }

 private:
  RngStream(std::uint64_t seed, std::uint64_t key)
      : seed_(seed), key_(key), engine_(key) {}

  // SplitMix64 finalizer.
  static std::uint64_t Mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t seed_;
  std::uint64_t key_;
  std::mt19937_64 engine_;
};

}  // namespace privmech

#endif  // PRIVMECH_RNG_HPP_
