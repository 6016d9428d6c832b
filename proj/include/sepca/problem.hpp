#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepca/scalar_coeffs.hpp"

namespace sepca {

/// The problem class dx = mu(x(t), x([t])) dt + sigma(x(t), x([t])) dB(t),
/// x(0) = xi, on [0, T] with integer T so that the unit intervals of the
/// piecewise-constant argument tile [0, T] exactly.
///
/// drift writes mu (d values), diffusion writes sigma as a d x r
/// row-major matrix. Both must be total on R^d x R^d and return finite
/// values for finite inputs. Immutable after construction; all callers
/// treat instances as values.
struct SepcaProblem {
    using CoeffFn =
        std::function<void(std::span<const double> x, std::span<const double> y, std::span<double> out)>;

    std::string name;
    int state_dim = 1; // d
    int noise_dim = 1; // r
    CoeffFn drift;
    CoeffFn diffusion;
    std::vector<double> initial; // xi
    int horizon = 1;             // T, positive integer

    /// Set for the built-in scalar families; lets the Monte Carlo harness
    /// run the batched kernels instead of the std::function path (both
    /// produce bit-identical trajectories).
    std::optional<ScalarSdeParams> scalar_coeffs;

    SepcaProblem with_horizon(int T) const;

    double drift_scalar(double x, double y) const;
    double diffusion_scalar(double x, double y) const;
};

/// Parameters of the polynomial test family
/// dx = (-x^alpha + a(x + x([t]))) dt + b(x + x([t])) dB, x(0) = c.
struct PolynomialParams {
    std::int64_t alpha = 3; // odd, >= 1
    double a = 0.0;
    double b = 0.0;
    double c = 0.0;
};

/// Builds the polynomial problem. Rejects even (or non-positive) alpha:
/// only odd alpha makes -x^alpha monotone decreasing, which the one-sided
/// Lipschitz condition needs.
SepcaProblem make_polynomial_problem(const PolynomialParams& params, int horizon = 1);

/// Scalar linear problem dx = (a x + a0 x([t])) dt + (b x + b0 x([t])) dB.
/// Oracle-backed special cases: b = b0 = 0 has a deterministic closed
/// form; a0 = b0 = 0 is geometric Brownian motion.
SepcaProblem make_linear_problem(double a, double a0, double b, double b0, double xi, int horizon);

/// Euclidean norm with a fixed summation order; |v| for d = 1.
double euclidean_norm(std::span<const double> v);

} // namespace sepca
