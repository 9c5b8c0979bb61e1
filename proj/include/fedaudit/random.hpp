// Copyright 2026 The fedaudit Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// =============================================================================

#ifndef FEDAUDIT_RANDOM_HPP_
#define FEDAUDIT_RANDOM_HPP_

#include <cstdint>
#include <initializer_list>
#include <random>

namespace fedaudit {

/// The single generator type used everywhere randomness is injected.
using Rng = std::mt19937_64;

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Derives an independent stream seed from a master seed and a list of tags
/// (round, client, purpose...). Pure function of its inputs.
inline std::uint64_t derive_seed(std::uint64_t master,
                                 std::initializer_list<std::uint64_t> tags) {
  std::uint64_t h = splitmix64(master);
  for (std::uint64_t t : tags) h = splitmix64(h ^ splitmix64(t + 0x632be59bd9b4e019ULL));
  return h;
}

/// Uniform double in [0, 1) with 53 random bits. Bit-reproducible across
/// standard library implementations, unlike std::uniform_real_distribution.
inline double uniform01(Rng& rng) {
  return static_cast<double>(rng() >> 11) * 0x1.0p-53;
}

/// Uniform integer in [0, bound) by rejection; bound must be positive.
inline std::uint64_t uniform_below(Rng& rng, std::uint64_t bound) {
  const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
  std::uint64_t v;
  do {
    v = rng();
  } while (v >= limit);
  return v % bound;
}

// Stream tags for derive_seed.
namespace stream {
inline constexpr std::uint64_t kKeygen = 1;
inline constexpr std::uint64_t kPartition = 2;
inline constexpr std::uint64_t kModelInit = 3;
inline constexpr std::uint64_t kLocalTrain = 4;
inline constexpr std::uint64_t kQuantize = 5;
inline constexpr std::uint64_t kEncrypt = 6;
inline constexpr std::uint64_t kAdversaries = 7;
inline constexpr std::uint64_t kAudit = 8;
inline constexpr std::uint64_t kRegistration = 9;
inline constexpr std::uint64_t kSplit = 10;
inline constexpr std::uint64_t kSynth = 11;
inline constexpr std::uint64_t kAggregate = 12;
}  // namespace stream

}  // namespace fedaudit

#endif  // FEDAUDIT_RANDOM_HPP_
