#include "sepca/problem.hpp"

#include <cmath>
#include <stdexcept>

namespace sepca {

SepcaProblem SepcaProblem::with_horizon(int T) const {
    if (T < 1) throw std::invalid_argument("horizon must be a positive integer");
    SepcaProblem p = *this;
    p.horizon = T;
    return p;
}

double SepcaProblem::drift_scalar(double x, double y) const {
    double out;
    drift({&x, 1}, {&y, 1}, {&out, 1});
    return out;
}

double SepcaProblem::diffusion_scalar(double x, double y) const {
    double out;
    diffusion({&x, 1}, {&y, 1}, {&out, 1});
    return out;
}

SepcaProblem make_polynomial_problem(const PolynomialParams& params, int horizon) {
    if (params.alpha < 1 || params.alpha % 2 == 0)
        throw std::invalid_argument("polynomial problem: alpha must be an odd positive integer");
    if (!std::isfinite(params.a) || !std::isfinite(params.b) || !std::isfinite(params.c))
        throw std::invalid_argument("polynomial problem: parameters must be finite");
    if (horizon < 1) throw std::invalid_argument("horizon must be a positive integer");

    ScalarSdeParams sc;
    sc.kind = ScalarSdeParams::Kind::polynomial;
    sc.alpha = params.alpha;
    sc.a = params.a;
    sc.b = params.b;

    SepcaProblem p;
    p.name = "poly";
    p.state_dim = 1;
    p.noise_dim = 1;
    p.initial = {params.c};
    p.horizon = horizon;
    p.scalar_coeffs = sc;
    const double a = params.a;
    const double b = params.b;
    const std::int64_t alpha = params.alpha;
    p.drift = [a, alpha](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = builtin::poly_mu(x[0], y[0], a, alpha);
    };
    p.diffusion = [b](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = builtin::poly_sigma(x[0], y[0], b);
    };
    return p;
}

SepcaProblem make_linear_problem(double a, double a0, double b, double b0, double xi, int horizon) {
    if (!std::isfinite(a) || !std::isfinite(a0) || !std::isfinite(b) || !std::isfinite(b0) ||
        !std::isfinite(xi))
        throw std::invalid_argument("linear problem: parameters must be finite");
    if (horizon < 1) throw std::invalid_argument("horizon must be a positive integer");

    ScalarSdeParams sc;
    sc.kind = ScalarSdeParams::Kind::linear;
    sc.a = a;
    sc.a0 = a0;
    sc.b = b;
    sc.b0 = b0;

    SepcaProblem p;
    p.name = "linear";
    p.state_dim = 1;
    p.noise_dim = 1;
    p.initial = {xi};
    p.horizon = horizon;
    p.scalar_coeffs = sc;
    p.drift = [a, a0](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = builtin::linear_mu(x[0], y[0], a, a0);
    };
    p.diffusion = [b, b0](std::span<const double> x, std::span<const double> y, std::span<double> out) {
        out[0] = builtin::linear_sigma(x[0], y[0], b, b0);
    };
    return p;
}

double euclidean_norm(std::span<const double> v) {
    if (v.size() == 1) return std::fabs(v[0]);
    double s = 0.0;
    for (double x : v) s += x * x;
    return std::sqrt(s);
}

} // namespace sepca
