#pragma once

#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>

namespace sepca::test {

// Units-in-the-last-place distance; 0 iff bit-identical (treating +0/-0 as
// equal), huge for NaN or mixed-sign pairs far apart.
inline std::int64_t ulp_distance(double a, double b) {
    if (a == b) return 0;
    if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::int64_t>::max();
    auto ord = [](double x) -> __int128 {
        const std::int64_t i = std::bit_cast<std::int64_t>(x);
        return i >= 0 ? static_cast<__int128>(i)
                      : -static_cast<__int128>(i & 0x7FFFFFFFFFFFFFFFLL);
    };
    const __int128 d = ord(a) > ord(b) ? ord(a) - ord(b) : ord(b) - ord(a);
    if (d > std::numeric_limits<std::int64_t>::max()) return std::numeric_limits<std::int64_t>::max();
    return static_cast<std::int64_t>(d);
}

// Independent rendering of the noise module's fixed summation contract:
// Neumaier-compensated ascending sum.
inline double compensated_sum(const double* xs, std::size_t n) {
    double s = 0.0, c = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double x = xs[i];
        const double t = s + x;
        c += (std::fabs(s) >= std::fabs(x)) ? ((s - t) + x) : ((x - t) + s);
        s = t;
    }
    return s + c;
}

// xorshift-style generator for test inputs only (independent of the
// library's SplitMix streams on purpose).
struct TestRng {
    std::uint64_t state;
    explicit TestRng(std::uint64_t seed) : state(seed * 2654435761u + 1) {}
    std::uint64_t next_u64() {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        return state;
    }
    double uniform01() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }
    // log-uniform magnitude with random sign
    double signed_logu(double lo_exp10, double hi_exp10) {
        const double mag = std::pow(10.0, uniform(lo_exp10, hi_exp10));
        return (next_u64() & 1) ? mag : -mag;
    }
};

} // namespace sepca::test
