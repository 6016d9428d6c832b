// Scalar reference kernels. Every arithmetic statement here defines the
// contract the SIMD backends must reproduce bit-for-bit; do not reorder
// operations without updating the AVX2 variants and the golden streams.

#include <cmath>
#include <limits>

#include "sepca/detail/compensated.hpp"
#include "sepca/detail/normal_inverse.hpp"
#include "sepca/kernels.hpp"

namespace sepca::kernels {
namespace {

void fill_normals_scalar(StreamKey key, std::uint64_t first_index, std::size_t count,
                         double scale, double* out) {
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t w = stream_word(key, first_index + i);
        out[i] = detail::normal_quantile(uniform_open01(w)) * scale;
    }
}

void coarsen_sum_scalar(const double* fine, double* coarse, std::size_t coarse_cells,
                        std::size_t factor, std::size_t lane_stride) {
    for (std::size_t j = 0; j < coarse_cells; ++j) {
        for (std::size_t lane = 0; lane < lane_stride; ++lane) {
            const double* block = fine + j * factor * lane_stride + lane;
            detail::CompensatedSum acc;
            for (std::size_t i = 0; i < factor; ++i) acc.add(block[i * lane_stride]);
            coarse[j * lane_stride + lane] = acc.value();
        }
    }
}

template <bool Tamed>
void path_scalar(const StepBatchArgs& args) {
    const ScalarSdeParams& c = args.coeffs;
    const double h = args.h;

    for (std::size_t lane = 0; lane < kLanes; ++lane) {
        double y = args.x0;
        double y_delay = args.x0;
        bool active = true;
        std::int64_t diverged = -1;
        args.out[lane] = y;

        std::int64_t next_store = 1;
        for (std::int64_t n = 0; n < args.n_steps; ++n) {
            if (active) {
                if (n % args.m == 0) y_delay = y;
                const double mu = builtin::mu(c, y, y_delay);
                const double sg = builtin::sigma(c, y, y_delay);
                const double dB = args.increments[n * kLanes + lane];
                if constexpr (Tamed) {
                    const double s = h / (1.0 + h * std::fabs(mu));
                    y = (y + mu * s) + sg * dB;
                } else {
                    y = (y + mu * h) + sg * dB;
                }
                if (!(std::fabs(y) <= std::numeric_limits<double>::max())) {
                    diverged = n + 1;
                    active = false;
                }
            }
            if (n + 1 == next_store * args.store_stride) {
                args.out[next_store * kLanes + lane] = y;
                ++next_store;
            }
        }
        if (args.diverged_at != nullptr) args.diverged_at[lane] = diverged;
    }
}

constexpr Ops kScalarOps{
    "scalar",
    &fill_normals_scalar,
    &coarsen_sum_scalar,
    &path_scalar<true>,
    &path_scalar<false>,
};

} // namespace

const Ops& scalar_ops() { return kScalarOps; }

} // namespace sepca::kernels
