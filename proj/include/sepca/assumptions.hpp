#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sepca/problem.hpp"

namespace sepca {

/// The four coefficient conditions probed by check_assumptions:
/// diffusion_lipschitz  ||sigma(x1,y1)-sigma(x2,y2)|| <= K(||x1-x2|| + ||y1-y2||)
/// one_sided            <x1-x2, mu(x1,y)-mu(x2,y)>   <= K||x1-x2||^2
/// delay_lipschitz      ||mu(x,y1)-mu(x,y2)||         <= K||y1-y2||
/// growth               ||mu_x(x,y)||                 <= K(1 + ||x||^c)
enum class AssumptionCondition { diffusion_lipschitz, one_sided, delay_lipschitz, growth };

std::string to_string(AssumptionCondition c);

/// A sampled point tuple together with its condition quotient. Fields not
/// involved in the condition are left empty.
struct AssumptionWitness {
    AssumptionCondition condition{};
    std::vector<double> x1, y1, x2, y2;
    double quotient = 0.0;
};

/// Sampled estimates of the smallest constants satisfying the conditions
/// on the probed box, clamped below at 0 (the conditions hold vacuously
/// with K = 0 when every quotient is negative, e.g. contractive drift).
///
/// `violations` holds a witness for every non-finite quotient and, for
/// the three Lipschitz-type conditions, the supremum witness whenever the
/// full-box supremum exceeds the half-box supremum by more than 25%:
/// a radius-dependent constant is evidence that no global K exists
/// (e.g. an even drift power).
struct AssumptionReport {
    double k_diffusion_lipschitz = 0.0;
    double k_one_sided = 0.0;
    double k_delay_lipschitz = 0.0;
    double growth_k = 0.0; // fitted K of condition (growth)
    double growth_c = 0.0; // fitted exponent c, clamped at 0

    std::vector<AssumptionWitness> violations;
    std::int64_t samples_used = 0;
    double box_radius = 0.0;

    // Diagnostics: where each supremum was attained and how it scales.
    AssumptionWitness sup_diffusion, sup_one_sided, sup_delay;
    double half_box_sup_diffusion = 0.0;
    double half_box_sup_one_sided = 0.0;
    double half_box_sup_delay = 0.0;
};

/// Draws `samples` uniform point tuples in [-box_radius, box_radius]^d
/// per argument, evaluates the condition quotients, fits (K, c) of the
/// growth condition by least squares of log(J) on log(1 + ||x||) with the
/// drift Jacobian J from central differences (step 1e-6 * max(1, ||x||)).
/// Deterministic given (problem, box_radius, samples, seed). Throws if
/// the coefficients return non-finite values inside the box.
AssumptionReport check_assumptions(const SepcaProblem& problem, double box_radius,
                                   std::int64_t samples, std::uint64_t seed);

} // namespace sepca
