#include "sepca/scheme.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace sepca {

namespace {

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!(std::fabs(x) <= std::numeric_limits<double>::max())) return false;
    return true;
}

// y_out = y + drift_increment + sigma * dB, row-major sigma (d x r).
void apply_step(std::span<const double> y, std::span<const double> drift_increment,
                std::span<const double> sigma, std::span<const double> dB,
                std::span<double> out) {
    const std::size_t d = y.size();
    const std::size_t r = dB.size();
    for (std::size_t i = 0; i < d; ++i) {
        double noise = 0.0;
        for (std::size_t j = 0; j < r; ++j) noise += sigma[i * r + j] * dB[j];
        out[i] = (y[i] + drift_increment[i]) + noise;
    }
}

template <bool Tamed>
Trajectory simulate(const SepcaProblem& problem, const BrownianGrid& path) {
    if (problem.noise_dim != path.noise_dim)
        throw std::invalid_argument("simulate: path noise dimension does not match the problem");
    if (problem.horizon != path.horizon)
        throw std::invalid_argument("simulate: path horizon does not match the problem");
    if (static_cast<int>(problem.initial.size()) != problem.state_dim)
        throw std::invalid_argument("simulate: initial value has wrong dimension");

    const std::size_t d = static_cast<std::size_t>(problem.state_dim);
    const std::size_t r = static_cast<std::size_t>(problem.noise_dim);
    const std::int64_t n_steps = path.total_steps();
    const std::int64_t m = path.steps_per_unit;
    const double h = path.step_size();

    Trajectory traj;
    traj.problem_name = problem.name;
    traj.state_dim = problem.state_dim;
    traj.horizon = problem.horizon;
    traj.steps_per_unit = m;
    traj.values.reserve(static_cast<std::size_t>(n_steps + 1) * d);
    traj.values.insert(traj.values.end(), problem.initial.begin(), problem.initial.end());

    std::vector<double> y = problem.initial;
    std::vector<double> mu(d), drift_incr(d), sigma(d * r), y_next(d);

    for (std::int64_t n = 0; n < n_steps; ++n) {
        const std::int64_t di = delay_index(n, m);
        const std::span<const double> y_delay{traj.values.data() + di * problem.state_dim, d};
        problem.drift(y, y_delay, mu);
        problem.diffusion(y, y_delay, sigma);
        if constexpr (Tamed) {
            tame_drift(mu, h, drift_incr);
        } else {
            for (std::size_t i = 0; i < d; ++i) drift_incr[i] = mu[i] * h;
        }
        apply_step(y, drift_incr, sigma, path.increment(n), y_next);
        if (!all_finite(y_next)) {
            traj.diverged_at = n + 1;
            return traj;
        }
        y = y_next;
        traj.values.insert(traj.values.end(), y.begin(), y.end());
    }
    return traj;
}

} // namespace

std::span<const double> Trajectory::value(std::int64_t n) const {
    if (n < 0 || n >= stored_points())
        throw std::out_of_range("Trajectory::value: index not stored (diverged or out of range)");
    return {values.data() + n * state_dim, static_cast<std::size_t>(state_dim)};
}

std::span<const double> Trajectory::terminal() const {
    if (diverged_at.has_value())
        throw std::out_of_range("Trajectory::terminal: trajectory diverged before T");
    return value(static_cast<std::int64_t>(horizon) * steps_per_unit);
}

std::int64_t delay_index(std::int64_t n, std::int64_t m) {
    if (n < 0 || m < 1) throw std::invalid_argument("delay_index: need n >= 0, m >= 1");
    return m * (n / m);
}

void tame_drift(std::span<const double> mu, double h, std::span<double> out) {
    const double scale = h / (1.0 + h * euclidean_norm(mu));
    for (std::size_t i = 0; i < mu.size(); ++i) out[i] = mu[i] * scale;
}

std::vector<double> tame_drift(std::span<const double> mu, double h) {
    std::vector<double> out(mu.size());
    tame_drift(mu, h, out);
    return out;
}

std::vector<double> tamed_euler_step(const SepcaProblem& problem, std::span<const double> y,
                                     std::span<const double> y_delay, double h,
                                     std::span<const double> dB) {
    const std::size_t d = static_cast<std::size_t>(problem.state_dim);
    const std::size_t r = static_cast<std::size_t>(problem.noise_dim);
    std::vector<double> mu(d), drift_incr(d), sigma(d * r), out(d);
    problem.drift(y, y_delay, mu);
    problem.diffusion(y, y_delay, sigma);
    tame_drift(mu, h, drift_incr);
    apply_step(y, drift_incr, sigma, dB, out);
    return out;
}

Trajectory simulate_tamed(const SepcaProblem& problem, const BrownianGrid& path) {
    return simulate<true>(problem, path);
}

Trajectory simulate_explicit_euler(const SepcaProblem& problem, const BrownianGrid& path) {
    return simulate<false>(problem, path);
}

std::vector<double> interpolate_in_cell(const Trajectory& traj, const SepcaProblem& problem,
                                        const BrownianGrid& path, const BrownianGrid& fine_path,
                                        std::int64_t cell, std::int64_t t_fine_index) {
    if (fine_path.steps_per_unit % path.steps_per_unit != 0)
        throw std::invalid_argument("interpolate: fine grid does not refine the coarse grid");
    if (fine_path.horizon != path.horizon || fine_path.noise_dim != path.noise_dim)
        throw std::invalid_argument("interpolate: grid shapes do not match");
    const std::int64_t factor = fine_path.steps_per_unit / path.steps_per_unit;
    if (cell < 0 || cell >= path.total_steps())
        throw std::out_of_range("interpolate: cell outside the coarse grid");
    if (t_fine_index < cell * factor || t_fine_index > (cell + 1) * factor)
        throw std::out_of_range("interpolate: fine index outside the requested cell");

    const std::size_t d = static_cast<std::size_t>(problem.state_dim);
    const std::size_t r = static_cast<std::size_t>(problem.noise_dim);
    const double h = path.step_size();
    const std::span<const double> y_n = traj.value(cell);
    const std::span<const double> y_delay = traj.value(delay_index(cell, path.steps_per_unit));

    std::vector<double> mu(d), drift_incr(d), sigma(d * r), out(d);
    problem.drift(y_n, y_delay, mu);
    problem.diffusion(y_n, y_delay, sigma);
    tame_drift(mu, h, drift_incr);

    const double ratio = static_cast<double>(t_fine_index - cell * factor) / static_cast<double>(factor);
    const std::vector<double> dB = increment_sum(fine_path, cell * factor, t_fine_index);
    for (std::size_t i = 0; i < d; ++i) {
        double noise = 0.0;
        for (std::size_t j = 0; j < r; ++j) noise += sigma[i * r + j] * dB[j];
        out[i] = (y_n[i] + drift_incr[i] * ratio) + noise;
    }
    return out;
}

std::vector<double> interpolate(const Trajectory& traj, const SepcaProblem& problem,
                                const BrownianGrid& path, const BrownianGrid& fine_path,
                                std::int64_t t_fine_index) {
    if (fine_path.steps_per_unit % path.steps_per_unit != 0)
        throw std::invalid_argument("interpolate: fine grid does not refine the coarse grid");
    if (t_fine_index < 0 || t_fine_index > fine_path.total_steps())
        throw std::out_of_range("interpolate: fine index outside [0, T]");
    const std::int64_t factor = fine_path.steps_per_unit / path.steps_per_unit;
    std::int64_t cell = t_fine_index / factor;
    if (cell == path.total_steps()) --cell; // final time: right edge of the last cell
    return interpolate_in_cell(traj, problem, path, fine_path, cell, t_fine_index);
}

} // namespace sepca
