#include "sepca/oracle.hpp"

#include <cmath>
#include <stdexcept>

#include "sepca/detail/compensated.hpp"

namespace sepca {

double solve_linear_pca_deterministic(double a, double a0, double xi, double t) {
    if (!(t >= 0.0)) throw std::invalid_argument("solve_linear_pca_deterministic: t must be >= 0");
    auto advance = [&](double u, double tau) {
        if (a != 0.0) {
            const double g = std::expm1(a * tau); // e^{a tau} - 1, stable for small a*tau
            return u * ((1.0 + g) + (a0 / a) * g);
        }
        return u * (1.0 + a0 * tau);
    };
    double u = xi;
    double n = 0.0;
    while (n + 1.0 <= t) {
        u = advance(u, 1.0);
        n += 1.0;
    }
    const double tau = t - n;
    if (tau > 0.0) u = advance(u, tau);
    return u;
}

double solve_gbm_on_path(double a, double b, double xi, const BrownianGrid& path, std::int64_t n) {
    if (n < 0 || n > path.total_steps())
        throw std::out_of_range("solve_gbm_on_path: grid index out of range");
    const double t = static_cast<double>(n) * path.step_size();
    const double B = cumulative_value(path, n)[0];
    return xi * std::exp((a - 0.5 * b * b) * t + b * B);
}

ReferenceSolution ReferenceSolution::fine_mesh_tamed(const SepcaProblem& problem,
                                                     const BrownianGrid& fine_path) {
    Trajectory traj = simulate_tamed(problem, fine_path);
    ReferenceSolution ref;
    ref.kind_ = Kind::fine_mesh_tamed;
    ref.state_dim_ = traj.state_dim;
    ref.horizon_ = traj.horizon;
    ref.steps_per_unit_ = traj.steps_per_unit;
    ref.diverged_at_ = traj.diverged_at;
    ref.values_ = std::move(traj.values);
    return ref;
}

ReferenceSolution ReferenceSolution::closed_form_deterministic(double a, double a0, double xi,
                                                               int horizon,
                                                               std::int64_t steps_per_unit) {
    ReferenceSolution ref;
    ref.kind_ = Kind::closed_form_deterministic;
    ref.state_dim_ = 1;
    ref.horizon_ = horizon;
    ref.steps_per_unit_ = steps_per_unit;
    const std::int64_t n_points = static_cast<std::int64_t>(horizon) * steps_per_unit + 1;
    ref.values_.resize(static_cast<std::size_t>(n_points));
    const double h = 1.0 / static_cast<double>(steps_per_unit);
    for (std::int64_t n = 0; n < n_points; ++n)
        ref.values_[static_cast<std::size_t>(n)] =
            solve_linear_pca_deterministic(a, a0, xi, static_cast<double>(n) * h);
    return ref;
}

ReferenceSolution ReferenceSolution::closed_form_gbm(double a, double b, double xi,
                                                     const BrownianGrid& path) {
    if (path.noise_dim != 1)
        throw std::invalid_argument("closed_form_gbm: scalar noise required");
    ReferenceSolution ref;
    ref.kind_ = Kind::closed_form_gbm;
    ref.state_dim_ = 1;
    ref.horizon_ = path.horizon;
    ref.steps_per_unit_ = path.steps_per_unit;
    const std::int64_t n_points = path.total_steps() + 1;
    ref.values_.resize(static_cast<std::size_t>(n_points));
    // One running prefix pass over the increments instead of quadratic
    // cumulative_value calls; same compensated summation, same order.
    detail::CompensatedSum B;
    const double h = path.step_size();
    const double drift = a - 0.5 * b * b;
    ref.values_[0] = xi;
    for (std::int64_t n = 1; n < n_points; ++n) {
        B.add(path.increments[static_cast<std::size_t>(n - 1)]);
        ref.values_[static_cast<std::size_t>(n)] =
            xi * std::exp(drift * (static_cast<double>(n) * h) + b * B.value());
    }
    return ref;
}

std::span<const double> ReferenceSolution::value_at(std::int64_t n, std::int64_t m) const {
    if (m < 1 || steps_per_unit_ % m != 0)
        throw std::invalid_argument("ReferenceSolution::value_at: m must divide the stored resolution");
    const std::int64_t idx = n * (steps_per_unit_ / m);
    const std::int64_t stored = static_cast<std::int64_t>(values_.size()) / state_dim_;
    if (n < 0 || idx >= stored)
        throw std::out_of_range("ReferenceSolution::value_at: index not stored (diverged or out of range)");
    return {values_.data() + idx * state_dim_, static_cast<std::size_t>(state_dim_)};
}

std::span<const double> ReferenceSolution::terminal() const {
    if (diverged_at_.has_value())
        throw std::out_of_range("ReferenceSolution::terminal: the fine-mesh run diverged");
    return value_at(static_cast<std::int64_t>(horizon_) * steps_per_unit_, steps_per_unit_);
}

ReferenceSolution reference_solution(const SepcaProblem& problem, const BrownianGrid& fine_path) {
    return ReferenceSolution::fine_mesh_tamed(problem, fine_path);
}

} // namespace sepca
