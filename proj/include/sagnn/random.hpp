#pragma once

#include <cstdint>
#include <random>

namespace sagnn {

using Rng = std::mt19937_64;

/// Independent stream for (seed, stream id). Every randomized operation takes
/// its own stream so results depend only on the seed, never on call order.
inline Rng make_rng(std::uint64_t seed, std::uint64_t stream = 0) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32), 0x5a6e6e75u};
    return Rng(seq);
}

}  // namespace sagnn
