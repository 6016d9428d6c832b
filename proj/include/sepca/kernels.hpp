#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <string_view>

#include "sepca/scalar_coeffs.hpp"
#include "sepca/seed.hpp"

// Arithmetic kernels behind the noise generator, the coarsening step and
// the batched trajectory integrators. Each kernel exists as a scalar
// reference implementation and, on x86-64, an AVX2 variant selected at
// runtime. The two are equivalence-tested to bit-identical output, so
// kernel selection never changes a result.

namespace sepca::kernels {

/// Lane count of the batched SoA layout (AVX2 register width in doubles).
inline constexpr std::size_t kLanes = 4;

/// One batch of up to kLanes independent trajectories of a built-in
/// scalar problem, advanced over the same step grid. Lane L of step n
/// reads increments[n*kLanes + L]. States are stored at steps
/// 0, store_stride, 2*store_stride, ..., n_steps into `out` (same SoA
/// layout), so out must hold (n_steps/store_stride + 1)*kLanes doubles.
struct StepBatchArgs {
    ScalarSdeParams coeffs;
    double x0 = 0.0;
    const double* increments = nullptr;
    std::int64_t n_steps = 0;     // T*m, divisible by store_stride
    std::int64_t m = 1;           // steps per unit time (delay stride)
    double h = 1.0;               // 1/m
    std::int64_t store_stride = 1;
    double* out = nullptr;
    std::int64_t* diverged_at = nullptr; // [kLanes], -1 if the lane stayed finite
};

struct Ops {
    const char* name;

    /// out[i] = scale * Phi^-1(U(stream_word(key, first_index + i))),
    /// i in [0, count).
    void (*fill_normals)(StreamKey key, std::uint64_t first_index, std::size_t count,
                         double scale, double* out);

    /// coarse[j*stride + L] = sum of fine[(j*factor + i)*stride + L] over
    /// i = 0..factor-1 in ascending order, for every cell j and lane
    /// L < lane_stride.
    void (*coarsen_sum)(const double* fine, double* coarse, std::size_t coarse_cells,
                        std::size_t factor, std::size_t lane_stride);

    /// Tamed Euler steps: y <- y + mu*h/(1 + h*|mu|) + sigma*dB, with the
    /// delayed argument snapshotted whenever the step index is a multiple
    /// of m. Lanes that turn non-finite freeze and report their index.
    void (*tamed_path)(const StepBatchArgs& args);

    /// Plain explicit Euler steps: y <- y + mu*h + sigma*dB, same delay
    /// and freeze semantics.
    void (*explicit_path)(const StepBatchArgs& args);
};

const Ops& scalar_ops();

bool avx2_supported();
#if defined(__x86_64__)
const Ops& avx2_ops();
#endif

/// Picks the backend: explicit name ("scalar", "avx2") wins, "auto" or
/// empty consults the SEPCA_KERNEL environment variable and then the CPU.
/// Throws std::invalid_argument for unknown names or unsupported ISAs.
const Ops& select_ops(std::string_view request = {});

/// Names of all backends usable on this machine.
std::string available_backends();

} // namespace sepca::kernels
