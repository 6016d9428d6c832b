#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <sstream>

#include "sepca/harness.hpp"
#include "sepca/problem.hpp"

using namespace sepca;

namespace {

ExperimentConfig small_poly_config() {
    ExperimentConfig cfg;
    cfg.problem = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    cfg.horizons = {1};
    cfg.levels = {64, 128, 256, 512};
    cfg.reference_level = 1 << 12;
    cfg.blocks = 4;
    cfg.per_block = 25;
    cfg.base_seed = 42;
    return cfg;
}

} // namespace

TEST_CASE("fit_order: exact power laws and frozen slopes") {
    const double hs[] = {0.25, 0.125, 0.0625, 0.03125};
    double e1[4], e2[4];
    for (int i = 0; i < 4; ++i) {
        e1[i] = 3.0 * hs[i];
        e2[i] = 3.0 * hs[i] * hs[i];
    }
    CHECK(fit_order(hs, e1) == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(fit_order(hs, e2) == doctest::Approx(2.0).epsilon(1e-12));

    // the published Table-1 eps(1) column fits to slope ~1.12
    const double ph[] = {0x1p-8, 0x1p-9, 0x1p-10, 0x1p-11, 0x1p-12};
    const double pe[] = {0.0022, 0.0010, 0.0005, 0.0002, 0.0001};
    CHECK(fit_order(ph, pe) == doctest::Approx(1.124079133216196).epsilon(1e-9));

    // two points (h, e), (h/2, e/2.2): slope log2(2.2)
    const double h2[] = {0.5, 0.25};
    const double e3[] = {1.0, 1.0 / 2.2};
    CHECK(fit_order(h2, e3) == doctest::Approx(1.1375035237499351).epsilon(1e-12));

    const double bad[] = {0.5, 0.0};
    const double ok[] = {1.0, 0.5};
    CHECK_THROWS_AS((void)fit_order(bad, ok), std::invalid_argument);
    CHECK_THROWS_AS((void)fit_order(ok, bad), std::invalid_argument);
    const double one[] = {0.5};
    const double onee[] = {1.0};
    CHECK_THROWS_AS((void)fit_order(one, onee), std::invalid_argument);
}

TEST_CASE("reduce_mse_summands: the epsilon(T) formula") {
    // single trajectory with terminal difference 0.3: eps = 0.09
    MseResult r = reduce_mse_summands({0.3 * 0.3});
    CHECK(r.eps == 0.3 * 0.3);
    CHECK(r.included == 1);
    CHECK(r.diverged == 0);

    const double nan = std::nan("");
    r = reduce_mse_summands({0.01, nan, 0.03, nan});
    CHECK(r.included == 2);
    CHECK(r.diverged == 2);
    CHECK(r.eps == doctest::Approx(0.02).epsilon(1e-15));
}

TEST_CASE("estimate_mse: zero when the level equals the reference level") {
    ExperimentConfig cfg = small_poly_config();
    cfg.levels = {cfg.reference_level};
    const MseResult r = estimate_mse(cfg, cfg.reference_level, 1);
    CHECK(r.eps == 0.0);
    CHECK(r.included == cfg.trajectories());
    CHECK(r.diverged == 0);
}

TEST_CASE("estimate_mse: summand multiset is invariant under worker scheduling") {
    ExperimentConfig cfg = small_poly_config();
    cfg.workers = 1;
    const MseResult r1 = estimate_mse(cfg, 128, 1);
    cfg.workers = 3;
    const MseResult r2 = estimate_mse(cfg, 128, 1);
    CHECK(r1.eps == r2.eps);
    CHECK(r1.summands == r2.summands); // even stronger: enumeration order fixed
    std::vector<double> s1 = r1.summands, s2 = r2.summands;
    std::sort(s1.begin(), s1.end());
    std::sort(s2.begin(), s2.end());
    CHECK(s1 == s2);
}

TEST_CASE("estimate_mse: batched and generic drivers produce identical summands") {
    ExperimentConfig cfg = small_poly_config();
    cfg.driver = Driver::batched;
    const MseResult rb = estimate_mse(cfg, 256, 1);
    cfg.driver = Driver::generic;
    const MseResult rg = estimate_mse(cfg, 256, 1);
    CHECK(rb.summands == rg.summands);
    CHECK(rb.eps == rg.eps);

    // also under the sup-over-grid error mode
    cfg.sup_over_grid = true;
    cfg.driver = Driver::batched;
    const MseResult sb = estimate_mse(cfg, 256, 1);
    cfg.driver = Driver::generic;
    const MseResult sg = estimate_mse(cfg, 256, 1);
    CHECK(sb.summands == sg.summands);
    // sup over grid dominates the terminal-only error
    CHECK(sb.eps >= rb.eps);
}

TEST_CASE("estimate_mse: standalone call equals the study's table cell") {
    ExperimentConfig cfg = small_poly_config();
    const ConvergenceReport report = run_convergence_study(cfg);
    for (const ConvergenceRow& row : report.tables[0].rows) {
        const MseResult r = estimate_mse(cfg, row.m, 1);
        CHECK(r.eps == row.eps);
    }
}

TEST_CASE("run_convergence_study: table shape, ratios, and fit") {
    ExperimentConfig cfg = small_poly_config();
    cfg.horizons = {1, 2};
    const ConvergenceReport report = run_convergence_study(cfg);
    REQUIRE(report.tables.size() == 2);
    for (const HorizonTable& t : report.tables) {
        REQUIRE(t.rows.size() == 4);
        CHECK(!t.rows[0].ratio.has_value()); // rendered "*"
        for (std::size_t i = 1; i < t.rows.size(); ++i) {
            REQUIRE(t.rows[i].ratio.has_value());
            CHECK(*t.rows[i].ratio == t.rows[i - 1].eps / t.rows[i].eps);
        }
        std::vector<double> hs, eps;
        for (const ConvergenceRow& row : t.rows) {
            hs.push_back(row.h);
            eps.push_back(row.eps);
        }
        CHECK(t.fitted_order_mse == fit_order(hs, eps));
        CHECK(t.fitted_strong_order == t.fitted_order_mse / 2.0);
        CHECK(t.trajectories_used == 100);
        CHECK(t.divergence_count == 0);
        // slope consistency: 2^fit lies inside the observed ratio range
        double lo = 1e300, hi = 0;
        for (std::size_t i = 1; i < t.rows.size(); ++i) {
            lo = std::min(lo, *t.rows[i].ratio);
            hi = std::max(hi, *t.rows[i].ratio);
        }
        const double implied = std::exp2(t.fitted_order_mse);
        CHECK(implied >= lo * 0.999);
        CHECK(implied <= hi * 1.001);
    }
}

TEST_CASE("run_convergence_study: CSV output is byte-identical across worker counts") {
    ExperimentConfig cfg = small_poly_config();
    cfg.workers = 1;
    const ConvergenceReport r1 = run_convergence_study(cfg);
    std::ostringstream csv1, json1;
    write_convergence_csv(r1, cfg, csv1);
    write_convergence_json(r1, cfg, json1);

    cfg.workers = 4;
    const ConvergenceReport r4 = run_convergence_study(cfg);
    std::ostringstream csv4, json4;
    write_convergence_csv(r4, cfg, csv4);
    write_convergence_json(r4, cfg, json4);

    CHECK(csv1.str() == csv4.str());
    CHECK(json1.str() == json4.str());
}

TEST_CASE("write_convergence_csv: Tables 1-2 layout") {
    ExperimentConfig cfg = small_poly_config();
    cfg.levels = {256, 512};
    cfg.horizons = {1, 3};
    const ConvergenceReport report = run_convergence_study(cfg);
    std::ostringstream os;
    write_convergence_csv(report, cfg, os);
    const std::string text = os.str();

    CHECK(text.find("step,eps_T1,ratio_T1,eps_T3,ratio_T3\n") != std::string::npos);
    CHECK(text.find("\n2^-8,") != std::string::npos);
    CHECK(text.find("\n2^-9,") != std::string::npos);
    CHECK(text.find(",*") != std::string::npos); // absent first-row ratio
    CHECK(text.find("# seed = 42") != std::string::npos);
    CHECK(text.find("# version = ") != std::string::npos);
    // decreasing h: the 2^-8 row comes before the 2^-9 row
    CHECK(text.find("\n2^-8,") < text.find("\n2^-9,"));
}

TEST_CASE("moment_sweep: constant problem has exactly |xi|^p moments") {
    ExperimentConfig cfg;
    cfg.problem = make_linear_problem(0, 0, 0, 0, 2.0, 1);
    cfg.horizons = {1};
    cfg.levels = {16, 64};
    cfg.reference_level = 256;
    cfg.blocks = 2;
    cfg.per_block = 10;
    cfg.base_seed = 7;
    const double ps[] = {2.0, 4.0};
    const MomentReport rep = moment_sweep(cfg, ps);
    REQUIRE(rep.entries.size() == 4);
    for (const MomentEntry& e : rep.entries)
        CHECK(e.tamed_moment == (e.p == 2.0 ? 4.0 : 16.0));
    for (const MomentLevelCounts& c : rep.counts) {
        CHECK(c.tamed_diverged == 0);
        CHECK(c.explicit_diverged == 0);
    }
}

TEST_CASE("moment_sweep: divergence contrast on the superlinear problem") {
    ExperimentConfig cfg;
    cfg.problem = make_polynomial_problem({5, 4.5, 3.0, 5.0});
    cfg.horizons = {1};
    cfg.levels = {8};
    cfg.reference_level = 8;
    cfg.blocks = 1;
    cfg.per_block = 100;
    cfg.base_seed = 9;
    const double ps[] = {1.0};
    const MomentReport rep = moment_sweep(cfg, ps);
    REQUIRE(rep.counts.size() == 1);
    CHECK(rep.counts[0].explicit_diverged >= 99);
    CHECK(rep.counts[0].tamed_diverged == 0);
}

TEST_CASE("moment_sweep: tamed second moments are stable across levels") {
    ExperimentConfig cfg;
    cfg.problem = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    cfg.horizons = {1};
    cfg.levels = {16, 64, 256, 1024};
    cfg.reference_level = 1024;
    cfg.blocks = 5;
    cfg.per_block = 100;
    cfg.base_seed = 4;
    const double ps[] = {2.0};
    const MomentReport rep = moment_sweep(cfg, ps);
    double lo = 1e300, hi = 0;
    for (const MomentEntry& e : rep.entries) {
        lo = std::min(lo, e.tamed_moment);
        hi = std::max(hi, e.tamed_moment);
    }
    CHECK(hi / lo < 2.0);
    for (const MomentLevelCounts& c : rep.counts) CHECK(c.tamed_diverged == 0);
}

TEST_CASE("estimate_mse: full 30x100 protocol lands at the published magnitude") {
    // 30 blocks of 100 outcomes, first parameter set, T = 1, m = 2^8:
    // the mean-square error comes out around 2e-3
    ExperimentConfig cfg;
    cfg.problem = make_polynomial_problem({3, 0.5, 1.0, 1.5});
    cfg.horizons = {1};
    cfg.levels = {256};
    cfg.reference_level = 1 << 16;
    cfg.blocks = 30;
    cfg.per_block = 100;
    cfg.base_seed = 42;
    const MseResult r = estimate_mse(cfg, 256, 1);
    CHECK(r.included == 3000);
    CHECK(r.eps > 0.0022 / 6.0);
    CHECK(r.eps < 0.0022 * 6.0);
}

TEST_CASE("config validation: rejected invalid combinations") {
    ExperimentConfig cfg = small_poly_config();
    cfg.levels = {48};
    CHECK_THROWS_AS((void)run_convergence_study(cfg), std::invalid_argument); // 48 !| 4096

    cfg = small_poly_config();
    cfg.levels = {512, 256};
    CHECK_THROWS_AS((void)run_convergence_study(cfg), std::invalid_argument); // not increasing

    cfg = small_poly_config();
    cfg.horizons = {0};
    CHECK_THROWS_AS((void)run_convergence_study(cfg), std::invalid_argument);

    cfg = small_poly_config();
    cfg.blocks = 0;
    CHECK_THROWS_AS((void)run_convergence_study(cfg), std::invalid_argument);

    cfg = small_poly_config();
    CHECK_THROWS_AS((void)estimate_mse(cfg, 100, 1), std::invalid_argument); // 100 !| 4096

    const double p0[] = {0.5};
    CHECK_THROWS_AS((void)moment_sweep(small_poly_config(), p0), std::invalid_argument);
}
