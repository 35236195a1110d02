#pragma once

#include <cstdint>
#include <random>

namespace nonreg {

using Engine = std::mt19937_64;

/// Identifies an independent random stream. Equal (seed, stream) pairs reproduce equal draws.
struct RngSeed {
    std::uint64_t seed = 0;
    std::uint64_t stream = 0;

    /// Stream for the `index`-th sub-task (bootstrap draw, replication, ...).
    RngSeed child(std::uint64_t index) const noexcept;

    Engine engine() const;

    friend bool operator==(const RngSeed&, const RngSeed&) = default;
};

std::uint64_t splitmix64(std::uint64_t x) noexcept;

/// Stable 64-bit hash of a string, used to give named tasks their own streams.
std::uint64_t stream_id(const char* name) noexcept;

}  // namespace nonreg
