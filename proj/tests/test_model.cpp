#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "sepca/assumptions.hpp"
#include "sepca/problem.hpp"

using namespace sepca;

TEST_CASE("polynomial problem: coefficient values") {
    const SepcaProblem p = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    CHECK(p.state_dim == 1);
    CHECK(p.noise_dim == 1);
    CHECK(p.initial[0] == 1.5);
    // drift(1.5, 1.5) = -1.5^3 + 0.5*(1.5+1.5) = -3.375 + 1.5
    CHECK(p.drift_scalar(1.5, 1.5) == doctest::Approx(-1.875).epsilon(1e-15));
    CHECK(p.diffusion_scalar(1.5, 1.5) == doctest::Approx(3.0).epsilon(1e-15));

    const SepcaProblem z = make_polynomial_problem({3, 0.0, 0.0, 0.0});
    CHECK(z.drift_scalar(0.0, 0.0) == 0.0);
    CHECK(z.diffusion_scalar(0.0, 0.0) == 0.0);

    // second experiment's parameter set constructs fine
    const SepcaProblem q = make_polynomial_problem({5, 4.5, 3.0, 1.0});
    CHECK(q.scalar_coeffs->alpha == 5);
    CHECK(q.initial[0] == 1.0);
}

TEST_CASE("polynomial problem: even or non-positive alpha is rejected") {
    CHECK_THROWS_AS((void)make_polynomial_problem({4, 0.5, 1.0, 1.5}), std::invalid_argument);
    CHECK_THROWS_AS((void)make_polynomial_problem({2, 0.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)make_polynomial_problem({0, 0.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_THROWS_AS((void)make_polynomial_problem({-3, 0.0, 0.0, 0.0}), std::invalid_argument);
    CHECK_NOTHROW((void)make_polynomial_problem({1, 0.5, 1.0, 0.0}));
}

TEST_CASE("linear problem: coefficient values") {
    const SepcaProblem p = make_linear_problem(-1.0, 0.25, 0.5, -0.75, 2.0, 3);
    CHECK(p.horizon == 3);
    CHECK(p.drift_scalar(2.0, 4.0) == -1.0 * 2.0 + 0.25 * 4.0);
    CHECK(p.diffusion_scalar(2.0, 4.0) == 0.5 * 2.0 + -0.75 * 4.0);
    CHECK(p.with_horizon(5).horizon == 5);
    CHECK_THROWS_AS((void)p.with_horizon(0), std::invalid_argument);
}

TEST_CASE("check_assumptions: linear problem estimates match the analytic constants") {
    const SepcaProblem p = make_linear_problem(1.0, 0.5, 1.0, 0.5, 1.0, 1);
    const AssumptionReport rep = check_assumptions(p, 10.0, 10000, 42);

    CHECK(rep.samples_used == 10000);
    CHECK(rep.violations.empty());
    // (one_sided) quotient is identically a = 1
    CHECK(rep.k_one_sided == doctest::Approx(1.0).epsilon(1e-12));
    // (delay_lipschitz) quotient is identically |a0| = 0.5
    CHECK(rep.k_delay_lipschitz == doctest::Approx(0.5).epsilon(1e-12));
    // (diffusion_lipschitz) sup approaches max(|b|, |b0|) = 1 from below
    CHECK(rep.k_diffusion_lipschitz > 0.9);
    CHECK(rep.k_diffusion_lipschitz <= 1.0 + 1e-9);
    // (growth) constant Jacobian |a| = 1: exponent ~ 0, K ~ 1
    CHECK(std::fabs(rep.growth_c) < 0.05);
    CHECK(rep.growth_k == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("check_assumptions: sampled linear estimates never exceed analytic bounds") {
    struct Case {
        double a, a0, b, b0;
    } cases[] = {{1, 0.5, 1, 0.5}, {-2, 0.25, 0.75, -1.5}, {0, 3, 2, 0}, {4, -4, -1, 1}};
    for (const Case& c : cases) {
        const SepcaProblem p = make_linear_problem(c.a, c.a0, c.b, c.b0, 1.0, 1);
        const AssumptionReport rep = check_assumptions(p, 5.0, 4000, 7);
        CHECK(rep.k_one_sided <= std::max(0.0, c.a) + 1e-9);
        CHECK(rep.k_delay_lipschitz <= std::fabs(c.a0) + 1e-9);
        CHECK(rep.k_diffusion_lipschitz <= std::max(std::fabs(c.b), std::fabs(c.b0)) + 1e-9);
        CHECK(rep.violations.empty());
    }
}

TEST_CASE("check_assumptions: odd polynomial one-sided estimate stays below a") {
    const SepcaProblem p = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    const AssumptionReport rep = check_assumptions(p, 10.0, 20000, 42);
    // monotone -x^3 contributes nonpositively to the one-sided quotient
    CHECK(rep.k_one_sided <= 0.5 + 1e-9);
    CHECK(rep.violations.empty());
    // |mu_x| = |-3x^2 + 0.5| grows quadratically; the log-log slope against
    // log(1 + ||x||) lands a little above alpha - 1 = 2 on a finite box
    CHECK(rep.growth_c > 1.5);
    CHECK(rep.growth_c < 3.5);
}

TEST_CASE("check_assumptions: even drift power yields a one-sided violation witness") {
    SepcaProblem p = make_polynomial_problem({3, 0.0, 1.0, 1.0});
    p.name = "even-square-drift";
    p.scalar_coeffs.reset();
    p.drift = [](std::span<const double> x, std::span<const double>, std::span<double> out) {
        out[0] = x[0] * x[0];
    };
    const AssumptionReport rep = check_assumptions(p, 10.0, 20000, 42);

    // quotient (x1^2 - x2^2)/(x1 - x2) = x1 + x2 grows with the box
    bool found = false;
    for (const AssumptionWitness& w : rep.violations)
        if (w.condition == AssumptionCondition::one_sided) {
            found = true;
            CHECK(w.quotient > 10.0); // sup ~ 2 * box_radius
            CHECK(w.quotient <= 20.0 + 1e-9);
        }
    CHECK(found);
    CHECK(rep.k_one_sided > 15.0);
}

TEST_CASE("check_assumptions: deterministic in (problem, box, samples, seed)") {
    const SepcaProblem p = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    const AssumptionReport r1 = check_assumptions(p, 4.0, 2000, 11);
    const AssumptionReport r2 = check_assumptions(p, 4.0, 2000, 11);
    CHECK(r1.k_diffusion_lipschitz == r2.k_diffusion_lipschitz);
    CHECK(r1.k_one_sided == r2.k_one_sided);
    CHECK(r1.k_delay_lipschitz == r2.k_delay_lipschitz);
    CHECK(r1.growth_k == r2.growth_k);
    CHECK(r1.growth_c == r2.growth_c);
}

TEST_CASE("check_assumptions: non-finite coefficients abort with a diagnostic") {
    SepcaProblem p = make_linear_problem(1.0, 0.0, 0.0, 0.0, 1.0, 1);
    p.scalar_coeffs.reset();
    p.drift = [](std::span<const double> x, std::span<const double>, std::span<double> out) {
        out[0] = 1.0 / (x[0] - x[0]); // inf
    };
    CHECK_THROWS_AS((void)check_assumptions(p, 1.0, 100, 1), std::domain_error);
    CHECK_THROWS_AS((void)check_assumptions(p, -1.0, 100, 1), std::invalid_argument);
    CHECK_THROWS_AS((void)check_assumptions(p, 1.0, 0, 1), std::invalid_argument);
}
