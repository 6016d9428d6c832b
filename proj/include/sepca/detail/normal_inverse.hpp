#pragma once

#include <bit>
#include <cmath>
#include <cstdint>

// Scalar reference implementation of the fixed normal-variate algorithm:
// inverse-CDF sampling through an AS241-style (Wichura PPND16) rational
// approximation. The natural log needed by the tail branches is computed
// here from IEEE primitives only (+, -, *, /, sqrt, bit ops), so a SIMD
// implementation that executes the same operation sequence per lane
// produces bit-identical output. Any change to a constant or to the
// operation order below changes every generated Brownian path.

namespace sepca::detail {

inline constexpr double kLn2Hi = 6.93147180369123816490e-01; // 0x3FE62E42FEE00000
inline constexpr double kLn2Lo = 1.90821492927058770002e-10; // 0x3DEA39EF35793C76
inline constexpr double kSqrt2 = 1.41421356237309514547e+00;

// atanh-series coefficients 1/(2k+1); ln m = 2s * poly(s^2), s = (m-1)/(m+1).
inline constexpr double kAtanhC[11] = {
    1.0,        1.0 / 3.0,  1.0 / 5.0,  1.0 / 7.0,  1.0 / 9.0,  1.0 / 11.0,
    1.0 / 13.0, 1.0 / 15.0, 1.0 / 17.0, 1.0 / 19.0, 1.0 / 21.0,
};

/// Natural log of a positive, normal (non-subnormal) double. Accurate to
/// ~1 ulp over the quantile tail range; branch structure is a single
/// mantissa-range blend so SIMD lanes can run it in lock step.
inline double log_positive(double x) {
    const std::uint64_t bits = std::bit_cast<std::uint64_t>(x);
    double e = static_cast<double>(static_cast<std::int64_t>(bits >> 52) - 1023);
    double m = std::bit_cast<double>((bits & 0x000FFFFFFFFFFFFFULL) | 0x3FF0000000000000ULL);
    if (m > kSqrt2) { // keep m in [sqrt(1/2), sqrt(2)) so s stays small
        m = 0.5 * m;
        e = e + 1.0;
    }
    const double s = (m - 1.0) / (m + 1.0);
    const double z = s * s;
    double p = kAtanhC[10];
    for (int i = 9; i >= 0; --i) p = p * z + kAtanhC[i];
    const double lnm = (2.0 * s) * p;
    return e * kLn2Hi + (lnm + e * kLn2Lo);
}

// PPND16 rational-approximation coefficients (Wichura, algorithm AS 241).
inline constexpr double kCentralNum[8] = {
    3.3871328727963666080e+00, 1.3314166789178437745e+02, 1.9715909503065514427e+03,
    1.3731693765509461125e+04, 4.5921953931549871457e+04, 6.7265770927008700853e+04,
    3.3430575583588128105e+04, 2.5090809287301226727e+03,
};
inline constexpr double kCentralDen[8] = {
    1.0,                       4.2313330701600911252e+01, 6.8718700749205790830e+02,
    5.3941960214247511077e+03, 2.1213794301586595867e+04, 3.9307895800092710610e+04,
    2.8729085735721942674e+04, 5.2264952788528545610e+03,
};
inline constexpr double kMidNum[8] = {
    1.42343711074968357734e+00, 4.63033784615654529590e+00, 5.76949722146069140550e+00,
    3.64784832476320460504e+00, 1.27045825245236838258e+00, 2.41780725177450611770e-01,
    2.27238449892691845833e-02, 7.74545014278341407640e-04,
};
inline constexpr double kMidDen[8] = {
    1.0,                        2.05319162663775882187e+00, 1.67638483018380384940e+00,
    6.89767334985100004550e-01, 1.48103976427480074590e-01, 1.51986665636164571966e-02,
    5.47593808499534494600e-04, 1.05075007164441684324e-09,
};
inline constexpr double kFarNum[8] = {
    6.65790464350110377720e+00, 5.46378491116411436990e+00, 1.78482653991729133580e+00,
    2.96560571828504891230e-01, 2.65321895265761230930e-02, 1.24266094738807843860e-03,
    2.71155556874348757815e-05, 2.01033439929228813265e-07,
};
inline constexpr double kFarDen[8] = {
    1.0,                        5.99832206555887937690e-01, 1.36929880922735805310e-01,
    1.48753612908506148525e-02, 7.86869131145613259100e-04, 1.84631831751005468180e-05,
    1.42151175831644588870e-07, 2.04426310338993978564e-15,
};

inline double horner8(const double (&c)[8], double x) {
    double p = c[7];
    for (int i = 6; i >= 0; --i) p = p * x + c[i];
    return p;
}

/// Standard normal quantile of u in the open interval (0, 1).
inline double normal_quantile(double u) {
    const double q = u - 0.5;
    if (std::fabs(q) <= 0.425) {
        const double r = 0.180625 - q * q;
        return q * (horner8(kCentralNum, r) / horner8(kCentralDen, r));
    }
    const double tail = (q < 0.0) ? u : 1.0 - u; // exact for u in [0.5, 1)
    const double s = std::sqrt(-log_positive(tail));
    double v;
    if (s <= 5.0) {
        const double t = s - 1.6;
        v = horner8(kMidNum, t) / horner8(kMidDen, t);
    } else {
        const double t = s - 5.0;
        v = horner8(kFarNum, t) / horner8(kFarDen, t);
    }
    return (q < 0.0) ? -v : v;
}

} // namespace sepca::detail
