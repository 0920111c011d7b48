// Copyright 2026 The bellsim Authors
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

#pragma once

#include <array>
#include <cstdint>

namespace bellsim {

/*!
 * Philox4x32-10 counter-based generator (Salmon et al., SC'11).
 *
 * A pure function of (key, counter): there is no state to advance, so the
 * random numbers for trial i of setting j can be computed by whichever worker
 * happens to own that trial.
 */
class Philox4x32 {
  public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) : key_(key) {}

    /// Key built from a 64-bit master seed.
    static constexpr Philox4x32 from_seed(std::uint64_t seed) {
        return Philox4x32(Key{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)});
    }

    constexpr Counter operator()(Counter ctr) const {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * ctr[0];
            const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * ctr[2];
            ctr = Counter{
                static_cast<std::uint32_t>(p1 >> 32) ^ ctr[1] ^ key[0],
                static_cast<std::uint32_t>(p1),
                static_cast<std::uint32_t>(p0 >> 32) ^ ctr[3] ^ key[1],
                static_cast<std::uint32_t>(p0),
            };
        }
        return ctr;
    }

    constexpr Key key() const { return key_; }

  private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    Key key_;
};

/// Maps a 32-bit word to the open interval (0, 1).
constexpr double to_unit_open(std::uint32_t x) { return (static_cast<double>(x) + 0.5) * 0x1.0p-32; }

/// Four open-interval uniforms from one generator call.
inline std::array<double, 4> uniforms4(const Philox4x32& gen, const Philox4x32::Counter& ctr) {
    const auto words = gen(ctr);
    return {to_unit_open(words[0]), to_unit_open(words[1]), to_unit_open(words[2]), to_unit_open(words[3])};
}

/// Counter for draw `block` of trial `index` in stream `stream`.
constexpr Philox4x32::Counter make_counter(std::uint64_t index, std::uint32_t stream, std::uint32_t block) {
    return {static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, block};
}

}  // namespace bellsim
