#pragma once

#include <cmath>

// Neumaier-compensated ascending summation: the fixed block-sum algorithm
// of the noise module (coarsening, cumulative Brownian values, partial
// increment sums). Ascending order plus compensation keeps every sum
// within ~1 ulp of the exact value of its inputs, which is what bounds
// the regrouping difference of nested coarsening. The SIMD kernels run
// the identical operation sequence per lane.

namespace sepca::detail {

struct CompensatedSum {
    double sum = 0.0;
    double comp = 0.0;

    void add(double x) {
        const double t = sum + x;
        comp += (std::fabs(sum) >= std::fabs(x)) ? ((sum - t) + x) : ((x - t) + sum);
        sum = t;
    }

    double value() const { return sum + comp; }
};

} // namespace sepca::detail
