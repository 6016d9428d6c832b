#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include "sepca/seed.hpp"

namespace sepca {

/// Discrete Brownian path over [0, T] at resolution m steps per unit
/// time, stored as per-step increments dB_n = B(t_{n+1}) - B(t_n) in
/// R^r, flattened [step * r + component]. Immutable after creation;
/// bit-identical for identical (key, r, T, m).
struct BrownianGrid {
    int noise_dim = 1;              // r
    int horizon = 1;                // T (unit time)
    std::int64_t steps_per_unit = 1; // m, step size h = 1/m
    std::vector<double> increments; // T*m*r doubles
    StreamKey key{};                // generating stream, 0 for hand-built grids
    SeedValue provenance{};         // (base seed, block, trajectory) when known

    std::int64_t total_steps() const { return static_cast<std::int64_t>(horizon) * steps_per_unit; }
    double step_size() const { return 1.0 / static_cast<double>(steps_per_unit); }

    std::span<const double> increment(std::int64_t n) const {
        return {increments.data() + n * noise_dim, static_cast<std::size_t>(noise_dim)};
    }
};

/// Generates T*m_fine increments, each coordinate Normal(0, 1/m_fine),
/// from the SplitMix64 counter stream under `key` through the fixed
/// inverse-CDF normal algorithm (see detail/normal_inverse.hpp). Draw
/// index of (step n, component j) is n*r + j.
BrownianGrid generate_fine_path(StreamKey key, int r, int T, std::int64_t m_fine);

/// Same, deriving the stream key from the seed triple and stamping it as
/// provenance.
BrownianGrid generate_fine_path(const SeedValue& seed, int r, int T, std::int64_t m_fine);

/// Exact coarsening: coarse increment j is the sum of fine increments
/// j*factor .. (j+1)*factor - 1 in ascending index order. `factor` must
/// divide steps_per_unit.
BrownianGrid coarsen(const BrownianGrid& path, std::int64_t factor);

/// B(t_n): ascending single-pass sum of the first n increments.
/// cumulative_value(path, 0) is the zero vector.
std::vector<double> cumulative_value(const BrownianGrid& path, std::int64_t n);

/// B(t_end) - B(t_begin): ascending sum of increments [begin, end).
/// Summing afresh (no carried prefix) makes the full-cell sum bit-equal
/// to the corresponding coarse increment.
std::vector<double> increment_sum(const BrownianGrid& path, std::int64_t begin, std::int64_t end);

/// Binary path dump: header of four little-endian u64 words
/// (r, T, m, key) followed by T*m*r little-endian binary64 increments.
void write_path_dump(const BrownianGrid& path, std::ostream& os);
BrownianGrid read_path_dump(std::istream& is);

} // namespace sepca
