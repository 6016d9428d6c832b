// AVX2 variants of the kernels. Each lane executes exactly the operation
// sequence of kernels_scalar.cpp / normal_inverse.hpp; branch selection
// becomes compute-both-and-blend, which is equivalent because the unused
// branch never poisons the selected value. Equivalence to the scalar
// backend is asserted bit-for-bit in tests/test_kernels.cpp.

#if defined(__x86_64__)

#include <immintrin.h>

#include <cmath>
#include <cstring>
#include <limits>

#include "sepca/detail/normal_inverse.hpp"
#include "sepca/kernels.hpp"

namespace sepca::kernels {
namespace {

inline __m256i mullo64(__m256i a, __m256i b) {
    // lo64(a*b) = alo*blo + ((alo*bhi + ahi*blo) << 32)
    const __m256i lo = _mm256_mul_epu32(a, b);
    const __m256i a_hi = _mm256_srli_epi64(a, 32);
    const __m256i b_hi = _mm256_srli_epi64(b, 32);
    const __m256i cross =
        _mm256_add_epi64(_mm256_mul_epu32(a_hi, b), _mm256_mul_epu32(a, b_hi));
    return _mm256_add_epi64(lo, _mm256_slli_epi64(cross, 32));
}

inline __m256i mix64_vec(__m256i z) {
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 30));
    z = mullo64(z, _mm256_set1_epi64x(static_cast<long long>(0xBF58476D1CE4E5B9ULL)));
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 27));
    z = mullo64(z, _mm256_set1_epi64x(static_cast<long long>(0x94D049BB133111EBULL)));
    z = _mm256_xor_si256(z, _mm256_srli_epi64(z, 31));
    return z;
}

// Exact conversion of unsigned values < 2^52 to double.
inline __m256d u52_to_double(__m256i v) {
    const __m256i hold = _mm256_set1_epi64x(0x4330000000000000LL); // 2^52
    const __m256d shifted = _mm256_castsi256_pd(_mm256_or_si256(v, hold));
    return _mm256_sub_pd(shifted, _mm256_set1_pd(0x1.0p52));
}

inline __m256d abs_pd(__m256d x) {
    return _mm256_and_pd(x, _mm256_castsi256_pd(_mm256_set1_epi64x(0x7FFFFFFFFFFFFFFFLL)));
}

inline __m256d neg_pd(__m256d x) {
    return _mm256_xor_pd(x, _mm256_set1_pd(-0.0));
}

inline __m256d horner8_vec(const double (&c)[8], __m256d x) {
    __m256d p = _mm256_set1_pd(c[7]);
    for (int i = 6; i >= 0; --i)
        p = _mm256_add_pd(_mm256_mul_pd(p, x), _mm256_set1_pd(c[i]));
    return p;
}

inline __m256d log_positive_vec(__m256d x) {
    using namespace sepca::detail;
    const __m256i bits = _mm256_castpd_si256(x);
    __m256d e = _mm256_sub_pd(u52_to_double(_mm256_srli_epi64(bits, 52)),
                              _mm256_set1_pd(1023.0));
    const __m256i mant =
        _mm256_or_si256(_mm256_and_si256(bits, _mm256_set1_epi64x(0x000FFFFFFFFFFFFFLL)),
                        _mm256_set1_epi64x(0x3FF0000000000000LL));
    __m256d m = _mm256_castsi256_pd(mant);
    const __m256d big = _mm256_cmp_pd(m, _mm256_set1_pd(kSqrt2), _CMP_GT_OQ);
    m = _mm256_blendv_pd(m, _mm256_mul_pd(_mm256_set1_pd(0.5), m), big);
    e = _mm256_add_pd(e, _mm256_and_pd(big, _mm256_set1_pd(1.0)));

    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d s = _mm256_div_pd(_mm256_sub_pd(m, one), _mm256_add_pd(m, one));
    const __m256d z = _mm256_mul_pd(s, s);
    __m256d p = _mm256_set1_pd(kAtanhC[10]);
    for (int i = 9; i >= 0; --i)
        p = _mm256_add_pd(_mm256_mul_pd(p, z), _mm256_set1_pd(kAtanhC[i]));
    const __m256d lnm = _mm256_mul_pd(_mm256_mul_pd(_mm256_set1_pd(2.0), s), p);
    return _mm256_add_pd(
        _mm256_mul_pd(e, _mm256_set1_pd(kLn2Hi)),
        _mm256_add_pd(lnm, _mm256_mul_pd(e, _mm256_set1_pd(kLn2Lo))));
}

inline __m256d normal_quantile_vec(__m256d u) {
    using namespace sepca::detail;
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d q = _mm256_sub_pd(u, half);
    const __m256d central_mask =
        _mm256_cmp_pd(abs_pd(q), _mm256_set1_pd(0.425), _CMP_LE_OQ);

    const __m256d r = _mm256_sub_pd(_mm256_set1_pd(0.180625), _mm256_mul_pd(q, q));
    const __m256d central = _mm256_mul_pd(
        q, _mm256_div_pd(horner8_vec(kCentralNum, r), horner8_vec(kCentralDen, r)));

    // tail = (q < 0) ? u : 1 - u  ==  min(u, 1 - u) since u is in (0, 1)
    const __m256d tail = _mm256_min_pd(u, _mm256_sub_pd(_mm256_set1_pd(1.0), u));
    const __m256d s = _mm256_sqrt_pd(neg_pd(log_positive_vec(tail)));

    const __m256d tm = _mm256_sub_pd(s, _mm256_set1_pd(1.6));
    const __m256d vmid = _mm256_div_pd(horner8_vec(kMidNum, tm), horner8_vec(kMidDen, tm));
    const __m256d tf = _mm256_sub_pd(s, _mm256_set1_pd(5.0));
    const __m256d vfar = _mm256_div_pd(horner8_vec(kFarNum, tf), horner8_vec(kFarDen, tf));
    const __m256d mid_mask = _mm256_cmp_pd(s, _mm256_set1_pd(5.0), _CMP_LE_OQ);
    __m256d v = _mm256_blendv_pd(vfar, vmid, mid_mask);

    const __m256d neg_mask = _mm256_cmp_pd(q, _mm256_setzero_pd(), _CMP_LT_OQ);
    v = _mm256_blendv_pd(v, neg_pd(v), neg_mask);
    return _mm256_blendv_pd(v, central, central_mask);
}

void fill_normals_avx2(StreamKey key, std::uint64_t first_index, std::size_t count,
                       double scale, double* out) {
    const __m256i key_v = _mm256_set1_epi64x(static_cast<long long>(key.word));
    const __m256i gamma = _mm256_set1_epi64x(static_cast<long long>(detail::kGoldenGamma));
    const __m256d scale_v = _mm256_set1_pd(scale);
    const __m256d half = _mm256_set1_pd(0.5);
    const __m256d ulp52 = _mm256_set1_pd(0x1.0p-52);

    std::size_t i = 0;
    for (; i + 4 <= count; i += 4) {
        const std::uint64_t base = first_index + i + 1; // stream_word uses index + 1
        const __m256i idx = _mm256_add_epi64(
            _mm256_set1_epi64x(static_cast<long long>(base)),
            _mm256_set_epi64x(3, 2, 1, 0));
        const __m256i w = mix64_vec(_mm256_add_epi64(key_v, mullo64(idx, gamma)));
        const __m256d u = _mm256_mul_pd(
            _mm256_add_pd(u52_to_double(_mm256_srli_epi64(w, 12)), half), ulp52);
        _mm256_storeu_pd(out + i, _mm256_mul_pd(normal_quantile_vec(u), scale_v));
    }
    for (; i < count; ++i) {
        const std::uint64_t w = stream_word(key, first_index + i);
        out[i] = detail::normal_quantile(uniform_open01(w)) * scale;
    }
}

void coarsen_sum_avx2(const double* fine, double* coarse, std::size_t coarse_cells,
                      std::size_t factor, std::size_t lane_stride) {
    if (lane_stride != kLanes) {
        scalar_ops().coarsen_sum(fine, coarse, coarse_cells, factor, lane_stride);
        return;
    }
    // Per-lane CompensatedSum with the branch rendered as a blend.
    for (std::size_t j = 0; j < coarse_cells; ++j) {
        const double* block = fine + j * factor * kLanes;
        __m256d sum = _mm256_setzero_pd();
        __m256d comp = _mm256_setzero_pd();
        for (std::size_t i = 0; i < factor; ++i) {
            const __m256d x = _mm256_loadu_pd(block + i * kLanes);
            const __m256d t = _mm256_add_pd(sum, x);
            const __m256d sum_big =
                _mm256_cmp_pd(abs_pd(sum), abs_pd(x), _CMP_GE_OQ);
            const __m256d corr_sum = _mm256_add_pd(_mm256_sub_pd(sum, t), x);
            const __m256d corr_x = _mm256_add_pd(_mm256_sub_pd(x, t), sum);
            comp = _mm256_add_pd(comp, _mm256_blendv_pd(corr_x, corr_sum, sum_big));
            sum = t;
        }
        _mm256_storeu_pd(coarse + j * kLanes, _mm256_add_pd(sum, comp));
    }
}

template <bool Tamed>
void path_avx2(const StepBatchArgs& args) {
    const ScalarSdeParams& c = args.coeffs;
    const bool poly = c.kind == ScalarSdeParams::Kind::polynomial;
    const __m256d h = _mm256_set1_pd(args.h);
    const __m256d one = _mm256_set1_pd(1.0);
    const __m256d dbl_max = _mm256_set1_pd(std::numeric_limits<double>::max());
    const __m256d ca = _mm256_set1_pd(c.a);
    const __m256d ca0 = _mm256_set1_pd(c.a0);
    const __m256d cb = _mm256_set1_pd(c.b);
    const __m256d cb0 = _mm256_set1_pd(c.b0);

    __m256d y = _mm256_set1_pd(args.x0);
    __m256d y_delay = y;
    __m256d active = _mm256_castsi256_pd(_mm256_set1_epi64x(-1LL));
    std::int64_t diverged[kLanes] = {-1, -1, -1, -1};
    _mm256_storeu_pd(args.out, y);

    std::int64_t next_store = 1;
    for (std::int64_t n = 0; n < args.n_steps; ++n) {
        if (n % args.m == 0) y_delay = _mm256_blendv_pd(y_delay, y, active);

        __m256d mu, sg;
        if (poly) {
            const __m256d sum = _mm256_add_pd(y, y_delay);
            __m256d p = y;
            for (std::int64_t k = 1; k < c.alpha; ++k) p = _mm256_mul_pd(p, y);
            mu = _mm256_sub_pd(_mm256_mul_pd(ca, sum), p);
            sg = _mm256_mul_pd(cb, sum);
        } else {
            mu = _mm256_add_pd(_mm256_mul_pd(ca, y), _mm256_mul_pd(ca0, y_delay));
            sg = _mm256_add_pd(_mm256_mul_pd(cb, y), _mm256_mul_pd(cb0, y_delay));
        }

        const __m256d dB = _mm256_loadu_pd(args.increments + n * kLanes);
        __m256d y_new;
        if constexpr (Tamed) {
            const __m256d scale =
                _mm256_div_pd(h, _mm256_add_pd(one, _mm256_mul_pd(h, abs_pd(mu))));
            y_new = _mm256_add_pd(_mm256_add_pd(y, _mm256_mul_pd(mu, scale)),
                                  _mm256_mul_pd(sg, dB));
        } else {
            y_new = _mm256_add_pd(_mm256_add_pd(y, _mm256_mul_pd(mu, h)),
                                  _mm256_mul_pd(sg, dB));
        }
        y = _mm256_blendv_pd(y, y_new, active);

        const __m256d finite = _mm256_cmp_pd(abs_pd(y), dbl_max, _CMP_LE_OQ);
        const __m256d newly = _mm256_andnot_pd(finite, active);
        if (_mm256_movemask_pd(newly) != 0) {
            const int bits = _mm256_movemask_pd(newly);
            for (std::size_t lane = 0; lane < kLanes; ++lane)
                if (bits & (1 << lane)) diverged[lane] = n + 1;
            active = _mm256_and_pd(active, finite);
        }

        if (n + 1 == next_store * args.store_stride) {
            _mm256_storeu_pd(args.out + next_store * kLanes, y);
            ++next_store;
        }
    }
    if (args.diverged_at != nullptr)
        std::memcpy(args.diverged_at, diverged, sizeof(diverged));
}

constexpr Ops kAvx2Ops{
    "avx2",
    &fill_normals_avx2,
    &coarsen_sum_avx2,
    &path_avx2<true>,
    &path_avx2<false>,
};

} // namespace

const Ops& avx2_ops() { return kAvx2Ops; }

} // namespace sepca::kernels

#endif // __x86_64__
