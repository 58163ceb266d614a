//
// Copyright 2026 The modgame Authors
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

#pragma once

#include <cstdint>
#include <initializer_list>
#include <random>

namespace modgame {

using Seed = std::uint64_t;

// SplitMix64 finalizer; used only to derive substream seeds.
inline std::uint64_t mix64(std::uint64_t z) {
  z += 0x9e3779b97f4a7c15ULL;
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Substream seed keyed on a root seed and a path of indices, e.g.
// (seed, trial, machine). Distinct paths give unrelated streams, so a
// machine's data never depends on generation order or thread count.
inline Seed derive_seed(Seed root, std::initializer_list<std::uint64_t> path) {
  std::uint64_t h = mix64(root);
  for (std::uint64_t p : path) h = mix64(h ^ mix64(p + 0x632be59bd9b4e019ULL));
  return h;
}

using Engine = std::mt19937_64;

inline Engine make_engine(Seed s) { return Engine(s); }

// Well-known tags that keep substreams of different purposes apart.
namespace stream_tag {
inline constexpr std::uint64_t kSignal = 0x5167;
inline constexpr std::uint64_t kTrial = 0x7472;
inline constexpr std::uint64_t kMachine = 0x6d63;
}  // namespace stream_tag

}  // namespace modgame
