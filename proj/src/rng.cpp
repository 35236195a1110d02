#include "nonreg/rng.hpp"

namespace nonreg {

std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t stream_id(const char* name) noexcept {
    // FNV-1a
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (; *name; ++name) {
        h ^= static_cast<unsigned char>(*name);
        h *= 0x100000001b3ULL;
    }
    return h;
}

RngSeed RngSeed::child(std::uint64_t index) const noexcept {
    return {seed, splitmix64(stream ^ splitmix64(index + 0x632be59bd9b4e019ULL))};
}

Engine RngSeed::engine() const {
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(stream), static_cast<std::uint32_t>(stream >> 32)};
    return Engine(seq);
}

}  // namespace nonreg
