// Copyright 2026 The tmgas Authors
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

#pragma once

#include <array>
#include <cstdint>
#include <limits>

namespace tmgas {

/// SplitMix64 finalizer; used both as a seed expander and as a hash mixer.
constexpr std::uint64_t mix64(std::uint64_t z) noexcept {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

class SplitMix64 {
 public:
  explicit constexpr SplitMix64(std::uint64_t seed) noexcept : state_(seed) {}
  constexpr std::uint64_t next() noexcept { return mix64(state_ += 0x9E3779B97F4A7C15ULL); }

 private:
  std::uint64_t state_;
};

/// xoshiro256++ (Blackman & Vigna). Satisfies UniformRandomBitGenerator so
/// the <random> distributions can draw from it.
class Xoshiro256pp {
 public:
  using result_type = std::uint64_t;

  explicit constexpr Xoshiro256pp(std::uint64_t seed) noexcept {
    SplitMix64 sm(seed);
    for (auto& w : s_) w = sm.next();
  }

  static constexpr result_type min() noexcept { return 0; }
  static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

  constexpr result_type operator()() noexcept {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  /// Uniform double in [0, 1) with 53 random bits.
  constexpr double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }
  std::array<std::uint64_t, 4> s_{};
};

/// Independent stream for trajectory `index` of ensemble `stream_key` under
/// `master_seed`. A pure function of its arguments, so results never depend
/// on which worker draws which trajectory.
constexpr Xoshiro256pp make_stream(std::uint64_t master_seed, std::uint64_t stream_key, std::uint64_t index) noexcept {
  std::uint64_t h = mix64(master_seed + 0x9E3779B97F4A7C15ULL);
  h = mix64(h ^ (stream_key * 0xD1B54A32D192ED03ULL + 0x8CB92BA72F3D8DD7ULL));
  h = mix64(h ^ (index * 0xAEF17502108EF2D9ULL + 0x2545F4914F6CDD1DULL));
  return Xoshiro256pp(h);
}

}  // namespace tmgas
