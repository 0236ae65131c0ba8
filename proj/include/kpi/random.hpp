// Copyright 2026 The kpi Authors
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

#ifndef KPI_RANDOM_HPP_
#define KPI_RANDOM_HPP_

#include <cstdint>
#include <random>

namespace kpi {

using Rng = std::mt19937_64;

// Independent consumers of the global seed. Adding a consumer must not
// shift the draws of the others.
enum class RandomStream : std::uint32_t {
  kSampling = 1,
  kExcitation = 2,
  kDictionary = 3,
};

inline Rng MakeStream(std::uint64_t seed, RandomStream stream) {
  std::seed_seq seq{static_cast<std::uint32_t>(seed),
                    static_cast<std::uint32_t>(seed >> 32),
                    static_cast<std::uint32_t>(stream)};
  return Rng(seq);
}

}  // namespace kpi

#endif  // KPI_RANDOM_HPP_
