#pragma once

// Seeded random streams. Every random draw in the library comes from a
// stream derived from (master seed, tag, index...) so results do not depend
// on how work is scheduled across threads.

#include <cstdint>
#include <initializer_list>
#include <random>
#include <string_view>

namespace imprs {

inline constexpr std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t hash_tag(std::string_view tag)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (char c : tag) {
        h ^= static_cast<unsigned char>(c);
        h *= 0x100000001b3ULL;
    }
    return h;
}

using Rng = std::mt19937_64;

/// Independent generator for a named substream.
inline Rng substream(std::uint64_t master, std::string_view tag, std::initializer_list<std::uint64_t> keys = {})
{
    std::uint64_t s = splitmix64(master ^ splitmix64(hash_tag(tag)));
    for (auto k : keys) s = splitmix64(s ^ splitmix64(k + 0x632be59bd9b4e019ULL));
    std::seed_seq seq{static_cast<std::uint32_t>(s), static_cast<std::uint32_t>(s >> 32),
                      static_cast<std::uint32_t>(splitmix64(s)), static_cast<std::uint32_t>(splitmix64(s) >> 32)};
    return Rng(seq);
}

/// Uniform on the open interval (0, 1).
inline double uniform01(Rng& rng)
{
    return (static_cast<double>(rng() >> 11) + 0.5) * 0x1.0p-53;
}

/// Standard normal draw by inversion; portable across standard libraries.
double standard_normal(Rng& rng);

/// Standard normal restricted to [lo, hi] (either end may be infinite).
double truncated_standard_normal(Rng& rng, double lo, double hi);

}  // namespace imprs
