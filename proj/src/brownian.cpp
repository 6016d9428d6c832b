#include "sepca/brownian.hpp"

#include <bit>
#include <cmath>
#include <cstring>
#include <istream>
#include <ostream>
#include <stdexcept>

#include "sepca/detail/compensated.hpp"
#include "sepca/kernels.hpp"

namespace sepca {

namespace {

void check_dims(int r, int T, std::int64_t m) {
    if (r < 1) throw std::invalid_argument("noise_dim must be >= 1");
    if (T < 1) throw std::invalid_argument("horizon must be a positive integer");
    if (m < 1) throw std::invalid_argument("steps_per_unit must be >= 1");
}

} // namespace

BrownianGrid generate_fine_path(StreamKey key, int r, int T, std::int64_t m_fine) {
    check_dims(r, T, m_fine);
    BrownianGrid g;
    g.noise_dim = r;
    g.horizon = T;
    g.steps_per_unit = m_fine;
    g.key = key;
    const std::int64_t n = g.total_steps() * r;
    g.increments.resize(static_cast<std::size_t>(n));
    const double sqrt_h = std::sqrt(1.0 / static_cast<double>(m_fine));
    kernels::select_ops().fill_normals(key, 0, static_cast<std::size_t>(n), sqrt_h,
                                       g.increments.data());
    return g;
}

BrownianGrid generate_fine_path(const SeedValue& seed, int r, int T, std::int64_t m_fine) {
    BrownianGrid g = generate_fine_path(derive_stream_seed(seed), r, T, m_fine);
    g.provenance = seed;
    return g;
}

BrownianGrid coarsen(const BrownianGrid& path, std::int64_t factor) {
    if (factor < 1 || path.steps_per_unit % factor != 0)
        throw std::invalid_argument("coarsen: factor must divide steps_per_unit");
    BrownianGrid g;
    g.noise_dim = path.noise_dim;
    g.horizon = path.horizon;
    g.steps_per_unit = path.steps_per_unit / factor;
    g.key = path.key;
    g.provenance = path.provenance;
    const std::int64_t cells = g.total_steps();
    g.increments.resize(static_cast<std::size_t>(cells * path.noise_dim));
    kernels::select_ops().coarsen_sum(path.increments.data(), g.increments.data(),
                                      static_cast<std::size_t>(cells),
                                      static_cast<std::size_t>(factor),
                                      static_cast<std::size_t>(path.noise_dim));
    return g;
}

std::vector<double> cumulative_value(const BrownianGrid& path, std::int64_t n) {
    if (n < 0 || n > path.total_steps())
        throw std::out_of_range("cumulative_value: index outside [0, T*m]");
    return increment_sum(path, 0, n);
}

std::vector<double> increment_sum(const BrownianGrid& path, std::int64_t begin, std::int64_t end) {
    if (begin < 0 || end < begin || end > path.total_steps())
        throw std::out_of_range("increment_sum: bad step range");
    const int r = path.noise_dim;
    // Same compensated ascending summation as the coarsening kernel, so a
    // full-block sum reproduces the coarse increment bit-for-bit.
    std::vector<detail::CompensatedSum> acc(static_cast<std::size_t>(r));
    for (std::int64_t k = begin; k < end; ++k)
        for (int c = 0; c < r; ++c) acc[static_cast<std::size_t>(c)].add(path.increments[k * r + c]);
    std::vector<double> out(static_cast<std::size_t>(r));
    for (int c = 0; c < r; ++c) out[static_cast<std::size_t>(c)] = acc[static_cast<std::size_t>(c)].value();
    return out;
}

void write_path_dump(const BrownianGrid& path, std::ostream& os) {
    static_assert(std::endian::native == std::endian::little,
                  "path dump writer assumes a little-endian host");
    const std::uint64_t header[4] = {
        static_cast<std::uint64_t>(path.noise_dim),
        static_cast<std::uint64_t>(path.horizon),
        static_cast<std::uint64_t>(path.steps_per_unit),
        path.key.word,
    };
    os.write(reinterpret_cast<const char*>(header), sizeof(header));
    os.write(reinterpret_cast<const char*>(path.increments.data()),
             static_cast<std::streamsize>(path.increments.size() * sizeof(double)));
    if (!os) throw std::runtime_error("path dump: write failed");
}

BrownianGrid read_path_dump(std::istream& is) {
    static_assert(std::endian::native == std::endian::little,
                  "path dump reader assumes a little-endian host");
    std::uint64_t header[4];
    is.read(reinterpret_cast<char*>(header), sizeof(header));
    if (!is) throw std::runtime_error("path dump: truncated header");
    BrownianGrid g;
    g.noise_dim = static_cast<int>(header[0]);
    g.horizon = static_cast<int>(header[1]);
    g.steps_per_unit = static_cast<std::int64_t>(header[2]);
    g.key = StreamKey{header[3]};
    check_dims(g.noise_dim, g.horizon, g.steps_per_unit);
    g.increments.resize(static_cast<std::size_t>(g.total_steps() * g.noise_dim));
    is.read(reinterpret_cast<char*>(g.increments.data()),
            static_cast<std::streamsize>(g.increments.size() * sizeof(double)));
    if (!is) throw std::runtime_error("path dump: truncated payload");
    return g;
}

} // namespace sepca
