#pragma once

#include <cmath>
#include <cstdint>

namespace dislo {

// Counter-based draws: every value is a pure function of (seed, counters), so candidate
// sets do not depend on evaluation order or thread count.
inline uint64_t splitmix64(uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline uint64_t counter_hash(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    uint64_t h = splitmix64(seed);
    h = splitmix64(h ^ a);
    h = splitmix64(h ^ b);
    return splitmix64(h ^ c);
}

// uniform in (0, 1)
inline double counter_uniform(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    return (double(counter_hash(seed, a, b, c) >> 11) + 0.5) * 0x1.0p-53;
}

// standard normal by Box-Muller on two consecutive counters
inline double counter_normal(uint64_t seed, uint64_t a, uint64_t b, uint64_t c) {
    double u1 = counter_uniform(seed, a, b, 2 * c), u2 = counter_uniform(seed, a, b, 2 * c + 1);
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

}  // namespace dislo
