#include "sepca/assumptions.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "sepca/seed.hpp"

namespace sepca {

std::string to_string(AssumptionCondition c) {
    switch (c) {
        case AssumptionCondition::diffusion_lipschitz: return "diffusion_lipschitz";
        case AssumptionCondition::one_sided: return "one_sided";
        case AssumptionCondition::delay_lipschitz: return "delay_lipschitz";
        case AssumptionCondition::growth: return "growth";
    }
    return "?";
}

namespace {

class UniformBox {
  public:
    UniformBox(std::uint64_t seed, double radius) : key_(derive_stream_seed(seed, 0, 0)), radius_(radius) {}

    double next() {
        const double u = uniform_open01(stream_word(key_, index_++));
        return radius_ * (2.0 * u - 1.0);
    }

    void fill(std::vector<double>& v) {
        for (double& x : v) x = next();
    }

  private:
    StreamKey key_;
    std::uint64_t index_ = 0;
    double radius_;
};

double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

double frobenius(std::span<const double> m) {
    double s = 0.0;
    for (double x : m) s += x * x;
    return std::sqrt(s);
}

bool all_finite(std::span<const double> v) {
    for (double x : v)
        if (!std::isfinite(x)) return false;
    return true;
}

bool inside(const std::vector<double>& v, double radius) {
    for (double x : v)
        if (std::fabs(x) > radius) return false;
    return true;
}

struct SupTracker {
    double full = -std::numeric_limits<double>::infinity();
    double half = -std::numeric_limits<double>::infinity();
    std::int64_t half_samples = 0;
    AssumptionWitness witness;

    void offer(double q, bool in_half_box, AssumptionCondition cond, const std::vector<double>& x1,
               const std::vector<double>& y1, const std::vector<double>& x2,
               const std::vector<double>& y2) {
        if (in_half_box) {
            ++half_samples;
            half = std::max(half, q);
        }
        if (q > full) {
            full = q;
            witness = {cond, x1, y1, x2, y2, q};
        }
    }
};

} // namespace

AssumptionReport check_assumptions(const SepcaProblem& problem, double box_radius,
                                   std::int64_t samples, std::uint64_t seed) {
    if (box_radius <= 0.0) throw std::invalid_argument("check_assumptions: box_radius must be > 0");
    if (samples < 1) throw std::invalid_argument("check_assumptions: samples must be >= 1");

    const std::size_t d = static_cast<std::size_t>(problem.state_dim);
    const std::size_t dr = d * static_cast<std::size_t>(problem.noise_dim);
    UniformBox rng(seed, box_radius);

    std::vector<double> x1(d), y1(d), x2(d), y2(d);
    std::vector<double> mu1(d), mu2(d), sg1(dr), sg2(dr), diff(std::max(d, dr));
    std::vector<double> xp(d), xm(d), jac(d * d);

    AssumptionReport rep;
    rep.samples_used = samples;
    rep.box_radius = box_radius;

    SupTracker t_diff, t_one, t_delay;
    // growth fit accumulators: regress log J on log(1 + ||x||)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    std::int64_t n_fit = 0;

    auto eval = [&](const SepcaProblem::CoeffFn& fn, std::span<const double> x,
                    std::span<const double> y, std::span<double> out, const char* what) {
        fn(x, y, out);
        if (!all_finite(out))
            throw std::domain_error(std::string("check_assumptions: ") + what +
                                    " returned a non-finite value inside the box");
    };

    for (std::int64_t s = 0; s < samples; ++s) {
        rng.fill(x1);
        rng.fill(y1);
        rng.fill(x2);
        rng.fill(y2);

        // (diffusion_lipschitz) ||sigma(x1,y1) - sigma(x2,y2)|| / (||dx|| + ||dy||)
        eval(problem.diffusion, x1, y1, sg1, "diffusion");
        eval(problem.diffusion, x2, y2, sg2, "diffusion");
        for (std::size_t i = 0; i < d; ++i) diff[i] = x1[i] - x2[i];
        const double ndx = euclidean_norm({diff.data(), d});
        for (std::size_t i = 0; i < d; ++i) diff[i] = y1[i] - y2[i];
        const double ndy = euclidean_norm({diff.data(), d});
        const bool half_all = inside(x1, box_radius / 2) && inside(y1, box_radius / 2) &&
                              inside(x2, box_radius / 2) && inside(y2, box_radius / 2);
        if (ndx + ndy > 0.0) {
            for (std::size_t i = 0; i < dr; ++i) diff[i] = sg1[i] - sg2[i];
            const double q = frobenius({diff.data(), dr}) / (ndx + ndy);
            if (!std::isfinite(q))
                rep.violations.push_back({AssumptionCondition::diffusion_lipschitz, x1, y1, x2, y2, q});
            else
                t_diff.offer(q, half_all, AssumptionCondition::diffusion_lipschitz, x1, y1, x2, y2);
        }

        // (one_sided) <x1-x2, mu(x1,y1) - mu(x2,y1)> / ||x1-x2||^2, shared y1
        eval(problem.drift, x1, y1, mu1, "drift");
        eval(problem.drift, x2, y1, mu2, "drift");
        if (ndx > 0.0) {
            for (std::size_t i = 0; i < d; ++i) diff[i] = x1[i] - x2[i];
            std::vector<double> dmu(d);
            for (std::size_t i = 0; i < d; ++i) dmu[i] = mu1[i] - mu2[i];
            const double q = dot({diff.data(), d}, dmu) / (ndx * ndx);
            const bool half = inside(x1, box_radius / 2) && inside(x2, box_radius / 2) &&
                              inside(y1, box_radius / 2);
            if (!std::isfinite(q))
                rep.violations.push_back({AssumptionCondition::one_sided, x1, y1, x2, {}, q});
            else
                t_one.offer(q, half, AssumptionCondition::one_sided, x1, y1, x2, {});
        }

        // (delay_lipschitz) ||mu(x1,y1) - mu(x1,y2)|| / ||y1-y2||, shared x1
        eval(problem.drift, x1, y2, mu2, "drift");
        if (ndy > 0.0) {
            for (std::size_t i = 0; i < d; ++i) diff[i] = mu1[i] - mu2[i];
            const double q = euclidean_norm({diff.data(), d}) / ndy;
            const bool half = inside(x1, box_radius / 2) && inside(y1, box_radius / 2) &&
                              inside(y2, box_radius / 2);
            if (!std::isfinite(q))
                rep.violations.push_back({AssumptionCondition::delay_lipschitz, x1, y1, {}, y2, q});
            else
                t_delay.offer(q, half, AssumptionCondition::delay_lipschitz, x1, y1, {}, y2);
        }

        // (growth) central-difference Jacobian of mu in x at (x1, y1)
        const double nx = euclidean_norm({x1.data(), d});
        const double delta = 1e-6 * std::max(1.0, nx);
        for (std::size_t j = 0; j < d; ++j) {
            xp = x1;
            xm = x1;
            xp[j] += delta;
            xm[j] -= delta;
            eval(problem.drift, xp, y1, mu1, "drift");
            eval(problem.drift, xm, y1, mu2, "drift");
            for (std::size_t i = 0; i < d; ++i) jac[i * d + j] = (mu1[i] - mu2[i]) / (2.0 * delta);
        }
        const double jn = frobenius({jac.data(), d * d});
        if (!std::isfinite(jn)) {
            rep.violations.push_back({AssumptionCondition::growth, x1, y1, {}, {}, jn});
        } else if (jn > 0.0) {
            const double lx = std::log(1.0 + nx);
            const double ly = std::log(jn);
            sx += lx;
            sy += ly;
            sxx += lx * lx;
            sxy += lx * ly;
            ++n_fit;
        }
    }

    rep.k_diffusion_lipschitz = std::max(0.0, t_diff.full);
    rep.k_one_sided = std::max(0.0, t_one.full);
    rep.k_delay_lipschitz = std::max(0.0, t_delay.full);
    rep.sup_diffusion = t_diff.witness;
    rep.sup_one_sided = t_one.witness;
    rep.sup_delay = t_delay.witness;
    rep.half_box_sup_diffusion = t_diff.half;
    rep.half_box_sup_one_sided = t_one.half;
    rep.half_box_sup_delay = t_delay.half;

    if (n_fit > 0) {
        const double n = static_cast<double>(n_fit);
        const double var = sxx - sx * sx / n;
        double c = (var > 0.0) ? (sxy - sx * sy / n) / var : 0.0;
        c = std::max(0.0, c);
        const double intercept = (sy - c * sx) / n;
        rep.growth_c = c;
        rep.growth_k = std::exp(intercept);
    }

    // A Lipschitz-type constant that grows with the box radius means no
    // global K exists; flag the supremum witness.
    auto flag_growth = [&](const SupTracker& t) {
        if (t.half_samples < 30) return;
        if (t.full > 0.0 && t.full > 1.25 * std::max(t.half, 0.0) + 1e-9)
            rep.violations.push_back(t.witness);
    };
    flag_growth(t_diff);
    flag_growth(t_one);
    flag_growth(t_delay);

    return rep;
}

} // namespace sepca
