#pragma once

#include <cstdint>

namespace sepca {

/// Key of one pseudo-random stream. The value is the wire format of
/// reproducibility: identical keys yield bit-identical streams on every
/// platform with IEEE-754 binary64 arithmetic.
struct StreamKey {
    std::uint64_t word = 0;

    friend bool operator==(StreamKey, StreamKey) = default;
};

/// (base seed, block index, trajectory index) triple identifying one
/// Monte Carlo trajectory. Distinct triples map to distinct stream keys.
struct SeedValue {
    std::uint64_t base = 0;
    std::int64_t block = 0;
    std::int64_t trajectory = 0;

    friend bool operator==(SeedValue, SeedValue) = default;
};

namespace detail {

// SplitMix64 finalizer (Steele, Lea, Flood / Stafford mix). The exact
// constants below are fixed; changing them changes every stream.
inline constexpr std::uint64_t kGoldenGamma = 0x9E3779B97F4A7C15ULL;

inline constexpr std::uint64_t mix64(std::uint64_t z) {
    z ^= z >> 30;
    z *= 0xBF58476D1CE4E5B9ULL;
    z ^= z >> 27;
    z *= 0x94D049BB133111EBULL;
    z ^= z >> 31;
    return z;
}

} // namespace detail

/// Mixes the (base, block, trajectory) triple into a stream key.
/// Injective in practice: each index is multiplied by a fixed odd
/// constant (a bijection of the 64-bit words) and absorbed through the
/// SplitMix64 finalizer.
inline StreamKey derive_stream_seed(std::uint64_t base, std::int64_t block, std::int64_t trajectory) {
    std::uint64_t k = detail::mix64(base);
    k = detail::mix64(k ^ (0x9E3779B97F4A7C15ULL * (static_cast<std::uint64_t>(block) + 1)));
    k = detail::mix64(k ^ (0xC2B2AE3D27D4EB4FULL * (static_cast<std::uint64_t>(trajectory) + 1)));
    return StreamKey{k};
}

inline StreamKey derive_stream_seed(const SeedValue& sv) {
    return derive_stream_seed(sv.base, sv.block, sv.trajectory);
}

/// i-th 64-bit word of the stream under `key`: the SplitMix64 output
/// sequence seeded at key.
inline std::uint64_t stream_word(StreamKey key, std::uint64_t index) {
    return detail::mix64(key.word + (index + 1) * detail::kGoldenGamma);
}

/// Uniform variate in the open interval (0, 1), midpoint of one of the
/// 2^52 equal subintervals selected by the word's top bits. Never returns
/// 0 or 1, so the normal quantile below is always finite.
inline double uniform_open01(std::uint64_t word) {
    return (static_cast<double>(word >> 12) + 0.5) * 0x1.0p-52;
}

} // namespace sepca
