#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepca/brownian.hpp"
#include "sepca/problem.hpp"

namespace sepca {

/// Grid values y_0..y_N of one numerical solution on one Brownian path,
/// flattened [n * d + i]. On divergence, diverged_at holds the index of
/// the first non-finite value and storage stops just before it; all
/// stored values are finite.
struct Trajectory {
    std::string problem_name;
    int state_dim = 1;
    int horizon = 1;
    std::int64_t steps_per_unit = 1;
    std::vector<double> values;
    std::optional<std::int64_t> diverged_at;

    std::int64_t stored_points() const {
        return static_cast<std::int64_t>(values.size()) / state_dim;
    }
    std::span<const double> value(std::int64_t n) const;
    /// y_{Tm}; throws if the trajectory diverged before reaching T.
    std::span<const double> terminal() const;
};

/// Grid index of x([t_n]): m * floor(n / m), the solution value at the
/// most recent integer time (h = 1/m makes every integer a grid point).
std::int64_t delay_index(std::int64_t n, std::int64_t m);

/// mu * h / (1 + h * ||mu||): every drift increment has norm < 1 and
/// <= h*||mu||, and keeps the direction of mu (it is mu scaled by the
/// nonnegative factor h / (1 + h*||mu||)).
void tame_drift(std::span<const double> mu, double h, std::span<double> out);
std::vector<double> tame_drift(std::span<const double> mu, double h);

/// One step y_{n+1} = y_n + tame_drift(mu(y_n, y_delay), h) + sigma(y_n,
/// y_delay) * dB. Total: a non-finite result (sigma overflow) is returned,
/// not thrown; simulate_* record it as divergence.
std::vector<double> tamed_euler_step(const SepcaProblem& problem, std::span<const double> y,
                                     std::span<const double> y_delay, double h,
                                     std::span<const double> dB);

/// Iterates the tamed scheme from y_0 = xi over the whole grid of `path`.
Trajectory simulate_tamed(const SepcaProblem& problem, const BrownianGrid& path);

/// Untamed baseline y_{n+1} = y_n + mu*h + sigma*dB. Divergence is an
/// expected, recorded outcome, not an error.
Trajectory simulate_explicit_euler(const SepcaProblem& problem, const BrownianGrid& path);

/// Continuous interpolant of the tamed scheme evaluated at fine-grid time
/// t = t_fine_index / fine_path.m inside coarse cell n:
///   y(t) = y_n + tame_drift(mu, h) * (t - t_n)/h + sigma * (B(t) - B(t_n)),
/// with B(t) - B(t_n) the ascending sum of the fine increments in
/// [t_n, t). Evaluating at the right edge (t_fine_index = (n+1)*factor)
/// reproduces the stored step exactly.
std::vector<double> interpolate_in_cell(const Trajectory& traj, const SepcaProblem& problem,
                                        const BrownianGrid& path, const BrownianGrid& fine_path,
                                        std::int64_t cell, std::int64_t t_fine_index);

/// Cell-selecting wrapper: t in [t_n, t_{n+1}) evaluates in cell n; the
/// final time T evaluates cell Tm-1 at its right edge.
std::vector<double> interpolate(const Trajectory& traj, const SepcaProblem& problem,
                                const BrownianGrid& path, const BrownianGrid& fine_path,
                                std::int64_t t_fine_index);

} // namespace sepca
