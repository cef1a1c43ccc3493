#pragma once

#include <cstdint>
#include <random>

namespace cvl {

using Rng = std::mt19937_64;

// Independent, reproducible stream for a (seed, purpose) pair. Streams for
// different purposes never share state, so toggling one consumer (e.g. the
// policy) cannot perturb draws made by another (e.g. batch sampling).
inline Rng make_stream(std::uint64_t seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32),
                      0x9e3779b9u};
    return Rng(seq);
}

namespace stream {
inline constexpr std::uint64_t kInit = 1;
inline constexpr std::uint64_t kBatch = 2;
inline constexpr std::uint64_t kPolicy = 3;
inline constexpr std::uint64_t kRff = 4;
inline constexpr std::uint64_t kEval = 5;
inline constexpr std::uint64_t kPretrainBatch = 6;
inline constexpr std::uint64_t kData = 7;
}  // namespace stream

}  // namespace cvl
