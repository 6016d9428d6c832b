#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "sepca/brownian.hpp"
#include "sepca/problem.hpp"
#include "sepca/scheme.hpp"

namespace sepca {

/// Closed form of the deterministic piecewise-constant-argument equation
/// u'(t) = a u(t) + a0 u([t]), u(0) = xi, by the method of steps: on
/// [n, n+1], u(t) = u(n) (e^{a tau} + (a0/a)(e^{a tau} - 1)) with
/// tau = t - n (and u(n)(1 + a0 tau) when a = 0).
double solve_linear_pca_deterministic(double a, double a0, double xi, double t);

/// Pathwise-exact solution of dx = a x dt + b x dB on the grid of `path`:
/// xi * exp((a - b^2/2) t_n + b B(t_n)), B from cumulative_value.
double solve_gbm_on_path(double a, double b, double xi, const BrownianGrid& path, std::int64_t n);

/// Reference solution exposed at the times of any grid whose resolution
/// divides the stored one. Three kinds: the fine-mesh tamed solution (the
/// default reference, mirroring the usual practice of treating a very
/// fine mesh as exact) and two truly exact closed forms that keep order
/// measurements from being purely self-referential.
class ReferenceSolution {
  public:
    enum class Kind { closed_form_deterministic, closed_form_gbm, fine_mesh_tamed };

    static ReferenceSolution fine_mesh_tamed(const SepcaProblem& problem,
                                             const BrownianGrid& fine_path);
    static ReferenceSolution closed_form_deterministic(double a, double a0, double xi, int horizon,
                                                       std::int64_t steps_per_unit);
    static ReferenceSolution closed_form_gbm(double a, double b, double xi,
                                             const BrownianGrid& path);

    Kind kind() const { return kind_; }
    int state_dim() const { return state_dim_; }
    int horizon() const { return horizon_; }
    /// Resolution the values are stored at (the fine m for fine_mesh_tamed).
    std::int64_t steps_per_unit() const { return steps_per_unit_; }
    /// Index of the first non-finite value of a diverged fine-mesh run.
    std::optional<std::int64_t> diverged_at() const { return diverged_at_; }

    /// Value at grid point n of a coarser grid with m steps per unit;
    /// m must divide steps_per_unit() (indices are exact multiples).
    std::span<const double> value_at(std::int64_t n, std::int64_t m) const;
    std::span<const double> terminal() const;

  private:
    Kind kind_{};
    int state_dim_ = 1;
    int horizon_ = 1;
    std::int64_t steps_per_unit_ = 1;
    std::vector<double> values_; // [(n)*d + i], total_steps+1 points when finite
    std::optional<std::int64_t> diverged_at_;
};

/// The default experiment reference: the tamed solution on the fine mesh.
ReferenceSolution reference_solution(const SepcaProblem& problem, const BrownianGrid& fine_path);

} // namespace sepca
