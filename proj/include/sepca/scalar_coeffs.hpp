#pragma once

#include <cstdint>

namespace sepca {

/// Coefficient parameters of the built-in scalar (d = r = 1) problem
/// families. The inline functions below are the single definition of the
/// coefficient arithmetic: the generic std::function-based problems and
/// the batched SIMD kernels both evaluate exactly this operation
/// sequence, which is what makes their trajectories bit-identical.
struct ScalarSdeParams {
    enum class Kind { polynomial, linear };

    Kind kind = Kind::linear;
    std::int64_t alpha = 1; // polynomial drift exponent, odd, >= 1
    double a = 0.0;
    double a0 = 0.0; // linear family only
    double b = 0.0;
    double b0 = 0.0; // linear family only
};

namespace builtin {

// x^alpha by ascending repeated multiplication; the loop order is fixed.
inline double pow_odd(double x, std::int64_t alpha) {
    double p = x;
    for (std::int64_t i = 1; i < alpha; ++i) p *= x;
    return p;
}

// drift -x^alpha + a*(x + y)
inline double poly_mu(double x, double y, double a, std::int64_t alpha) {
    return a * (x + y) - pow_odd(x, alpha);
}

// diffusion b*(x + y)
inline double poly_sigma(double x, double y, double b) {
    return b * (x + y);
}

inline double linear_mu(double x, double y, double a, double a0) {
    return a * x + a0 * y;
}

inline double linear_sigma(double x, double y, double b, double b0) {
    return b * x + b0 * y;
}

inline double mu(const ScalarSdeParams& p, double x, double y) {
    return p.kind == ScalarSdeParams::Kind::polynomial ? poly_mu(x, y, p.a, p.alpha)
                                                       : linear_mu(x, y, p.a, p.a0);
}

inline double sigma(const ScalarSdeParams& p, double x, double y) {
    return p.kind == ScalarSdeParams::Kind::polynomial ? poly_sigma(x, y, p.b)
                                                       : linear_sigma(x, y, p.b, p.b0);
}

} // namespace builtin
} // namespace sepca
