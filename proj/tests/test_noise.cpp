#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>

#include "sepca/brownian.hpp"
#include "sepca/seed.hpp"
#include "test_util.hpp"

using namespace sepca;
using sepca::test::compensated_sum;
using sepca::test::ulp_distance;

TEST_CASE("stream keys: determinism and distinctness") {
    CHECK(derive_stream_seed(42, 3, 17) == derive_stream_seed(42, 3, 17));
    CHECK(derive_stream_seed(42, 0, 0).word != derive_stream_seed(42, 0, 1).word);
    CHECK(derive_stream_seed(42, 0, 0).word != derive_stream_seed(42, 1, 0).word);
    CHECK(derive_stream_seed(42, 0, 0).word != derive_stream_seed(43, 0, 0).word);

    // the full experiment design: 30 blocks x 100 trajectories, no collisions
    std::set<std::uint64_t> keys;
    for (int b = 0; b < 30; ++b)
        for (int j = 0; j < 100; ++j) keys.insert(derive_stream_seed(42, b, j).word);
    CHECK(keys.size() == 3000);
}

TEST_CASE("generate_fine_path: determinism and definitional sums") {
    const StreamKey key = derive_stream_seed(7, 0, 0);
    const BrownianGrid p1 = generate_fine_path(key, 1, 2, 256);
    const BrownianGrid p2 = generate_fine_path(key, 1, 2, 256);
    REQUIRE(p1.increments.size() == 512);
    CHECK(p1.increments == p2.increments); // bit-identical

    // B(T) is defined as the compensated ascending sum of the increments
    const std::vector<double> BT = cumulative_value(p1, p1.total_steps());
    CHECK(BT[0] == compensated_sum(p1.increments.data(), p1.increments.size()));

    CHECK(cumulative_value(p1, 0)[0] == 0.0);
    CHECK_THROWS_AS((void)cumulative_value(p1, 513), std::out_of_range);
}

TEST_CASE("generate_fine_path: increment variance sits in the 5-sigma band") {
    const std::int64_t m = 1 << 10;
    const std::int64_t n = 1'000'000;
    // T chosen so the path holds >= 1e6 scalar increments
    const BrownianGrid p = generate_fine_path(derive_stream_seed(123, 0, 0), 1, 977, m);
    REQUIRE(p.total_steps() >= n);
    double mean = 0.0;
    for (std::int64_t i = 0; i < n; ++i) mean += p.increments[i];
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (std::int64_t i = 0; i < n; ++i) {
        const double d = p.increments[i] - mean;
        var += d * d;
    }
    var /= static_cast<double>(n - 1);
    const double want = 1.0 / static_cast<double>(m);
    const double band = 5.0 * std::sqrt(2.0 / static_cast<double>(n - 1)) * want;
    CHECK(var > want - band);
    CHECK(var < want + band);
}

TEST_CASE("coarsen: definitional sums on literals") {
    BrownianGrid p;
    p.noise_dim = 1;
    p.horizon = 1;
    p.steps_per_unit = 4;
    p.increments = {0.1, -0.2, 0.3, 0.4};

    const BrownianGrid c = coarsen(p, 2);
    REQUIRE(c.increments.size() == 2);
    CHECK(c.increments[0] == -0.1); // 0.1 + (-0.2) is exactly -0.1 in binary64
    CHECK(c.increments[1] == 0.7);
    CHECK(c.steps_per_unit == 2);
    CHECK(c.horizon == 1);

    const BrownianGrid id = coarsen(p, 1);
    CHECK(id.increments == p.increments);

    const BrownianGrid total = coarsen(p, 4);
    REQUIRE(total.increments.size() == 1);
    CHECK(total.increments[0] == compensated_sum(p.increments.data(), 4));

    CHECK_THROWS_AS((void)coarsen(p, 3), std::invalid_argument);
    CHECK_THROWS_AS((void)coarsen(p, 8), std::invalid_argument);
}

TEST_CASE("coarsen: refinement consistency is bit-exact (>= 1e5 entries)") {
    const BrownianGrid fine = generate_fine_path(derive_stream_seed(99, 1, 2), 1, 2, 1 << 17);
    const std::int64_t factor = 4;
    const BrownianGrid coarse = coarsen(fine, factor);
    REQUIRE(coarse.total_steps() == (std::int64_t{2} << 17) / 4);
    for (std::int64_t j = 0; j < coarse.total_steps(); ++j)
        REQUIRE(coarse.increments[j] == compensated_sum(fine.increments.data() + j * factor,
                                                        static_cast<std::size_t>(factor)));
}

TEST_CASE("coarsen: nesting agrees within 4 ulps at the block magnitude") {
    // Regrouping cannot preserve the last bits of a cancellation-small
    // entry, so the bound is taken at the scale of the block's absolute
    // sum; entries without heavy cancellation also agree at entry scale.
    const BrownianGrid fine = generate_fine_path(derive_stream_seed(5, 0, 3), 1, 1, 1 << 17);
    const BrownianGrid two_step = coarsen(coarsen(fine, 8), 4);
    const BrownianGrid one_step = coarsen(fine, 32);
    REQUIRE(two_step.total_steps() == one_step.total_steps());
    for (std::int64_t j = 0; j < one_step.total_steps(); ++j) {
        const double a = two_step.increments[j];
        const double b = one_step.increments[j];
        double abs_sum = 0.0;
        for (std::int64_t i = 0; i < 32; ++i) abs_sum += std::fabs(fine.increments[j * 32 + i]);
        REQUIRE(std::fabs(a - b) <= 4.0 * abs_sum * 0x1.0p-52);
        if (std::fabs(b) >= 0.25 * abs_sum) REQUIRE(ulp_distance(a, b) <= 4);
    }
}

TEST_CASE("coarsen: multi-dimensional noise coarsens per component") {
    const BrownianGrid fine = generate_fine_path(derive_stream_seed(11, 0, 0), 3, 1, 64);
    const BrownianGrid coarse = coarsen(fine, 16);
    REQUIRE(coarse.total_steps() == 4);
    for (std::int64_t j = 0; j < 4; ++j)
        for (int c = 0; c < 3; ++c) {
            double strided[16];
            for (std::int64_t i = 0; i < 16; ++i) strided[i] = fine.increments[(j * 16 + i) * 3 + c];
            REQUIRE(coarse.increments[j * 3 + c] == compensated_sum(strided, 16));
        }
}

TEST_CASE("cumulative_value: prefix differences recover increments") {
    const BrownianGrid p = generate_fine_path(derive_stream_seed(3, 2, 1), 1, 1, 1 << 10);
    // s_{n+1} - s_n differs from the increment only by prefix rounding
    double prev = 0.0;
    for (std::int64_t n = 0; n < p.total_steps(); ++n) {
        const double cur = cumulative_value(p, n + 1)[0];
        const double diff = cur - prev;
        const double scale = std::max({std::fabs(cur), std::fabs(prev), 1e-30});
        REQUIRE(std::fabs(diff - p.increments[n]) <= 4.0 * scale * 0x1.0p-52);
        prev = cur;
    }
    // and the library value matches an independent compensated pass
    CHECK(cumulative_value(p, p.total_steps())[0] ==
          compensated_sum(p.increments.data(), p.increments.size()));
}

TEST_CASE("increment_sum over a full block equals the coarse increment bit-exactly") {
    const BrownianGrid fine = generate_fine_path(derive_stream_seed(17, 4, 4), 1, 1, 1 << 12);
    const BrownianGrid coarse = coarsen(fine, 16);
    for (std::int64_t j = 0; j < coarse.total_steps(); ++j)
        REQUIRE(increment_sum(fine, j * 16, (j + 1) * 16)[0] == coarse.increments[j]);
}

TEST_CASE("binary path dump round-trips") {
    const BrownianGrid p = generate_fine_path(derive_stream_seed(21, 7, 9), 2, 3, 128);
    std::stringstream buf;
    write_path_dump(p, buf);
    CHECK(buf.str().size() == 32 + p.increments.size() * 8);
    const BrownianGrid q = read_path_dump(buf);
    CHECK(q.noise_dim == p.noise_dim);
    CHECK(q.horizon == p.horizon);
    CHECK(q.steps_per_unit == p.steps_per_unit);
    CHECK(q.key == p.key);
    CHECK(q.increments == p.increments);
}
