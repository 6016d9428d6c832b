#include "sepca/harness.hpp"

#include <algorithm>
#include <atomic>
#include <bit>
#include <cmath>
#include <cstdio>
#include <limits>
#include <mutex>
#include <ostream>
#include <stdexcept>
#include <thread>

#include <json.hpp>

#include "sepca/brownian.hpp"
#include "sepca/kernels.hpp"
#include "sepca/oracle.hpp"
#include "sepca/scheme.hpp"

#ifndef SEPCA_VERSION
#define SEPCA_VERSION "v0.0.0-unknown"
#endif

namespace sepca {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

std::string fmt_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

std::string fmt_eps(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.6e", v);
    return buf;
}

std::string fmt_ratio(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.4f", v);
    return buf;
}

std::string step_string(std::int64_t m) {
    if (m > 0 && std::has_single_bit(static_cast<std::uint64_t>(m)))
        return "2^-" + std::to_string(std::countr_zero(static_cast<std::uint64_t>(m)));
    return "1/" + std::to_string(m);
}

// Work items handed to a pool in arbitrary order; all writes go to
// disjoint per-item slots, so results do not depend on the worker count.
void parallel_for(std::int64_t n_items, int workers, const std::function<void(std::int64_t)>& fn) {
    int nw = workers > 0 ? workers : static_cast<int>(std::thread::hardware_concurrency());
    if (nw < 1) nw = 1;
    nw = static_cast<int>(std::min<std::int64_t>(nw, std::max<std::int64_t>(n_items, 1)));
    if (nw == 1) {
        for (std::int64_t i = 0; i < n_items; ++i) fn(i);
        return;
    }
    std::atomic<std::int64_t> next{0};
    std::mutex err_mutex;
    std::exception_ptr err;
    std::vector<std::thread> pool;
    pool.reserve(static_cast<std::size_t>(nw));
    for (int w = 0; w < nw; ++w) {
        pool.emplace_back([&] {
            for (;;) {
                const std::int64_t i = next.fetch_add(1, std::memory_order_relaxed);
                if (i >= n_items) return;
                try {
                    fn(i);
                } catch (...) {
                    std::lock_guard<std::mutex> lock(err_mutex);
                    if (!err) err = std::current_exception();
                    next.store(n_items);
                    return;
                }
            }
        });
    }
    for (auto& t : pool) t.join();
    if (err) std::rethrow_exception(err);
}

void atomic_min_index(std::atomic<std::int64_t>& a, std::int64_t v) {
    std::int64_t cur = a.load();
    while ((cur < 0 || v < cur) && !a.compare_exchange_weak(cur, v)) {
    }
}

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

bool use_batched_driver(const ExperimentConfig& cfg) {
    const bool eligible = cfg.problem.scalar_coeffs.has_value() && cfg.problem.state_dim == 1 &&
                          cfg.problem.noise_dim == 1;
    if (cfg.driver == Driver::batched && !eligible)
        throw std::invalid_argument("batched driver requires a built-in scalar problem");
    return eligible && cfg.driver != Driver::generic;
}

struct LevelResults {
    std::vector<double> summand;        // squared error per trajectory, NaN if diverged
    std::vector<std::uint8_t> diverged; // scheme divergence per trajectory
};

// Shared per-(T, levels) sweep: one fine path per trajectory, reference on
// the fine mesh, exact coarsening to every level, squared terminal (or
// sup-over-grid) error per trajectory.
std::vector<LevelResults> run_levels_batched(const ExperimentConfig& cfg, int T,
                                             std::span<const std::int64_t> levels) {
    const kernels::Ops& ops = kernels::select_ops(cfg.kernel);
    const ScalarSdeParams sc = *cfg.problem.scalar_coeffs;
    const double x0 = cfg.problem.initial[0];
    const std::int64_t m_ref = cfg.reference_level;
    const std::int64_t n_ref = static_cast<std::int64_t>(T) * m_ref;
    const double h_ref = 1.0 / static_cast<double>(m_ref);
    const double sqrt_h_ref = std::sqrt(h_ref);
    const bool sup = cfg.sup_over_grid;
    const std::int64_t finest = levels.back();
    const std::int64_t ref_stride = sup ? m_ref / finest : n_ref;
    const std::int64_t ref_stores = n_ref / ref_stride;
    const std::int64_t n_traj = cfg.trajectories();
    const std::int64_t n_batches = (n_traj + static_cast<std::int64_t>(kernels::kLanes) - 1) /
                                   static_cast<std::int64_t>(kernels::kLanes);

    std::vector<LevelResults> out(levels.size());
    for (auto& lr : out) {
        lr.summand.assign(static_cast<std::size_t>(n_traj), kNaN);
        lr.diverged.assign(static_cast<std::size_t>(n_traj), 0);
    }
    std::atomic<std::int64_t> ref_fail{-1};

    parallel_for(n_batches, cfg.workers, [&](std::int64_t b) {
        constexpr std::int64_t W = static_cast<std::int64_t>(kernels::kLanes);
        const std::int64_t t0 = b * W;
        std::vector<double> lane_fine(static_cast<std::size_t>(n_ref));
        std::vector<double> fine_soa(static_cast<std::size_t>(n_ref * W));
        std::vector<double> ref_out(static_cast<std::size_t>((ref_stores + 1) * W));
        std::int64_t ref_div[kernels::kLanes];

        for (std::int64_t lane = 0; lane < W; ++lane) {
            const std::int64_t t = std::min(t0 + lane, n_traj - 1); // pad with the last trajectory
            const StreamKey key =
                derive_stream_seed(cfg.base_seed, t / cfg.per_block, t % cfg.per_block);
            ops.fill_normals(key, 0, static_cast<std::size_t>(n_ref), sqrt_h_ref, lane_fine.data());
            for (std::int64_t n = 0; n < n_ref; ++n)
                fine_soa[static_cast<std::size_t>(n * W + lane)] =
                    lane_fine[static_cast<std::size_t>(n)];
        }

        kernels::StepBatchArgs ref_args;
        ref_args.coeffs = sc;
        ref_args.x0 = x0;
        ref_args.increments = fine_soa.data();
        ref_args.n_steps = n_ref;
        ref_args.m = m_ref;
        ref_args.h = h_ref;
        ref_args.store_stride = ref_stride;
        ref_args.out = ref_out.data();
        ref_args.diverged_at = ref_div;
        ops.tamed_path(ref_args);
        for (std::int64_t lane = 0; lane < W; ++lane) {
            if (t0 + lane < n_traj && ref_div[lane] >= 0) {
                atomic_min_index(ref_fail, t0 + lane);
                return;
            }
        }

        for (std::size_t li = 0; li < levels.size(); ++li) {
            const std::int64_t m = levels[li];
            const std::int64_t cells = static_cast<std::int64_t>(T) * m;
            const std::int64_t factor = m_ref / m;
            const std::int64_t lvl_stride = sup ? 1 : cells;
            const std::int64_t lvl_stores = cells / lvl_stride;

            std::vector<double> coarse(static_cast<std::size_t>(cells * W));
            std::vector<double> lvl_out(static_cast<std::size_t>((lvl_stores + 1) * W));
            std::int64_t lvl_div[kernels::kLanes];
            ops.coarsen_sum(fine_soa.data(), coarse.data(), static_cast<std::size_t>(cells),
                            static_cast<std::size_t>(factor), kernels::kLanes);

            kernels::StepBatchArgs args;
            args.coeffs = sc;
            args.x0 = x0;
            args.increments = coarse.data();
            args.n_steps = cells;
            args.m = m;
            args.h = 1.0 / static_cast<double>(m);
            args.store_stride = lvl_stride;
            args.out = lvl_out.data();
            args.diverged_at = lvl_div;
            (cfg.scheme == Scheme::tamed ? ops.tamed_path : ops.explicit_path)(args);

            for (std::int64_t lane = 0; lane < W; ++lane) {
                const std::int64_t t = t0 + lane;
                if (t >= n_traj) continue;
                if (lvl_div[lane] >= 0) {
                    out[li].diverged[static_cast<std::size_t>(t)] = 1;
                    continue;
                }
                double s;
                if (sup) {
                    s = 0.0;
                    const std::int64_t ref_skip = finest / m;
                    for (std::int64_t k = 0; k <= cells; ++k) {
                        const double d = ref_out[static_cast<std::size_t>((k * ref_skip) * W + lane)] -
                                         lvl_out[static_cast<std::size_t>(k * W + lane)];
                        const double v = d * d;
                        if (v > s) s = v;
                    }
                } else {
                    const double d = ref_out[static_cast<std::size_t>(ref_stores * W + lane)] -
                                     lvl_out[static_cast<std::size_t>(lvl_stores * W + lane)];
                    s = d * d;
                }
                out[li].summand[static_cast<std::size_t>(t)] = s;
            }
        }
    });

    const std::int64_t fail = ref_fail.load();
    if (fail >= 0)
        throw std::runtime_error(
            "fine-mesh reference diverged for block " + std::to_string(fail / cfg.per_block) +
            ", trajectory " + std::to_string(fail % cfg.per_block) +
            " (the problem violates the standing assumptions at this resolution)");
    return out;
}

std::vector<LevelResults> run_levels_generic(const ExperimentConfig& cfg, int T,
                                             std::span<const std::int64_t> levels) {
    const SepcaProblem problem = cfg.problem.with_horizon(T);
    const std::int64_t m_ref = cfg.reference_level;
    const std::int64_t n_traj = cfg.trajectories();
    const bool sup = cfg.sup_over_grid;

    std::vector<LevelResults> out(levels.size());
    for (auto& lr : out) {
        lr.summand.assign(static_cast<std::size_t>(n_traj), kNaN);
        lr.diverged.assign(static_cast<std::size_t>(n_traj), 0);
    }
    std::atomic<std::int64_t> ref_fail{-1};

    parallel_for(n_traj, cfg.workers, [&](std::int64_t t) {
        const SeedValue sv{cfg.base_seed, t / cfg.per_block, t % cfg.per_block};
        const BrownianGrid fine = generate_fine_path(sv, problem.noise_dim, T, m_ref);
        const ReferenceSolution ref = reference_solution(problem, fine);
        if (ref.diverged_at().has_value()) {
            atomic_min_index(ref_fail, t);
            return;
        }
        for (std::size_t li = 0; li < levels.size(); ++li) {
            const std::int64_t m = levels[li];
            const BrownianGrid path = coarsen(fine, m_ref / m);
            const Trajectory traj = cfg.scheme == Scheme::tamed
                                        ? simulate_tamed(problem, path)
                                        : simulate_explicit_euler(problem, path);
            if (traj.diverged_at.has_value()) {
                out[li].diverged[static_cast<std::size_t>(t)] = 1;
                continue;
            }
            double s;
            if (sup) {
                s = 0.0;
                for (std::int64_t k = 0; k <= path.total_steps(); ++k) {
                    const double v = squared_distance(ref.value_at(k, m), traj.value(k));
                    if (v > s) s = v;
                }
            } else {
                s = squared_distance(ref.terminal(), traj.terminal());
            }
            out[li].summand[static_cast<std::size_t>(t)] = s;
        }
    });

    const std::int64_t fail = ref_fail.load();
    if (fail >= 0)
        throw std::runtime_error(
            "fine-mesh reference diverged for block " + std::to_string(fail / cfg.per_block) +
            ", trajectory " + std::to_string(fail % cfg.per_block) +
            " (the problem violates the standing assumptions at this resolution)");
    return out;
}

std::vector<LevelResults> run_levels(const ExperimentConfig& cfg, int T,
                                     std::span<const std::int64_t> levels) {
    return use_batched_driver(cfg) ? run_levels_batched(cfg, T, levels)
                                   : run_levels_generic(cfg, T, levels);
}

struct MomentLevelData {
    std::vector<double> tamed_terminal_norm; // NaN if the tamed run diverged
    std::vector<std::uint8_t> tamed_diverged;
    std::vector<std::uint8_t> explicit_diverged;
};

std::vector<MomentLevelData> run_moment_levels(const ExperimentConfig& cfg, int T) {
    const std::int64_t m_ref = cfg.reference_level;
    const std::int64_t n_traj = cfg.trajectories();
    std::vector<MomentLevelData> out(cfg.levels.size());
    for (auto& ld : out) {
        ld.tamed_terminal_norm.assign(static_cast<std::size_t>(n_traj), kNaN);
        ld.tamed_diverged.assign(static_cast<std::size_t>(n_traj), 0);
        ld.explicit_diverged.assign(static_cast<std::size_t>(n_traj), 0);
    }

    if (use_batched_driver(cfg)) {
        const kernels::Ops& ops = kernels::select_ops(cfg.kernel);
        const ScalarSdeParams sc = *cfg.problem.scalar_coeffs;
        const double x0 = cfg.problem.initial[0];
        const std::int64_t n_ref = static_cast<std::int64_t>(T) * m_ref;
        const double h_ref = 1.0 / static_cast<double>(m_ref);
        const double sqrt_h_ref = std::sqrt(h_ref);
        const std::int64_t n_batches =
            (n_traj + static_cast<std::int64_t>(kernels::kLanes) - 1) /
            static_cast<std::int64_t>(kernels::kLanes);

        parallel_for(n_batches, cfg.workers, [&](std::int64_t b) {
            constexpr std::int64_t W = static_cast<std::int64_t>(kernels::kLanes);
            const std::int64_t t0 = b * W;
            std::vector<double> lane_fine(static_cast<std::size_t>(n_ref));
            std::vector<double> fine_soa(static_cast<std::size_t>(n_ref * W));
            for (std::int64_t lane = 0; lane < W; ++lane) {
                const std::int64_t t = std::min(t0 + lane, n_traj - 1);
                const StreamKey key =
                    derive_stream_seed(cfg.base_seed, t / cfg.per_block, t % cfg.per_block);
                ops.fill_normals(key, 0, static_cast<std::size_t>(n_ref), sqrt_h_ref,
                                 lane_fine.data());
                for (std::int64_t n = 0; n < n_ref; ++n)
                    fine_soa[static_cast<std::size_t>(n * W + lane)] =
                        lane_fine[static_cast<std::size_t>(n)];
            }
            for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
                const std::int64_t m = cfg.levels[li];
                const std::int64_t cells = static_cast<std::int64_t>(T) * m;
                std::vector<double> coarse(static_cast<std::size_t>(cells * W));
                std::vector<double> run_out(static_cast<std::size_t>(2 * W));
                std::int64_t div[kernels::kLanes];
                ops.coarsen_sum(fine_soa.data(), coarse.data(), static_cast<std::size_t>(cells),
                                static_cast<std::size_t>(m_ref / m), kernels::kLanes);

                kernels::StepBatchArgs args;
                args.coeffs = sc;
                args.x0 = x0;
                args.increments = coarse.data();
                args.n_steps = cells;
                args.m = m;
                args.h = 1.0 / static_cast<double>(m);
                args.store_stride = cells;
                args.out = run_out.data();
                args.diverged_at = div;

                ops.tamed_path(args);
                for (std::int64_t lane = 0; lane < W; ++lane) {
                    const std::int64_t t = t0 + lane;
                    if (t >= n_traj) continue;
                    if (div[lane] >= 0)
                        out[li].tamed_diverged[static_cast<std::size_t>(t)] = 1;
                    else
                        out[li].tamed_terminal_norm[static_cast<std::size_t>(t)] =
                            std::fabs(run_out[static_cast<std::size_t>(W + lane)]);
                }
                ops.explicit_path(args);
                for (std::int64_t lane = 0; lane < W; ++lane) {
                    const std::int64_t t = t0 + lane;
                    if (t < n_traj && div[lane] >= 0)
                        out[li].explicit_diverged[static_cast<std::size_t>(t)] = 1;
                }
            }
        });
        return out;
    }

    const SepcaProblem problem = cfg.problem.with_horizon(T);
    parallel_for(n_traj, cfg.workers, [&](std::int64_t t) {
        const SeedValue sv{cfg.base_seed, t / cfg.per_block, t % cfg.per_block};
        const BrownianGrid fine = generate_fine_path(sv, problem.noise_dim, T, m_ref);
        for (std::size_t li = 0; li < cfg.levels.size(); ++li) {
            const BrownianGrid path = coarsen(fine, m_ref / cfg.levels[li]);
            const Trajectory tamed = simulate_tamed(problem, path);
            if (tamed.diverged_at.has_value())
                out[li].tamed_diverged[static_cast<std::size_t>(t)] = 1;
            else
                out[li].tamed_terminal_norm[static_cast<std::size_t>(t)] =
                    euclidean_norm(tamed.terminal());
            const Trajectory expl = simulate_explicit_euler(problem, path);
            if (expl.diverged_at.has_value())
                out[li].explicit_diverged[static_cast<std::size_t>(t)] = 1;
        }
    });
    return out;
}

std::vector<std::pair<std::string, std::string>> config_kv(const ExperimentConfig& cfg) {
    std::vector<std::pair<std::string, std::string>> kv;
    kv.emplace_back("version", version());
    kv.emplace_back("problem", cfg.problem.name);
    if (cfg.problem.scalar_coeffs.has_value()) {
        const ScalarSdeParams& sc = *cfg.problem.scalar_coeffs;
        if (sc.kind == ScalarSdeParams::Kind::polynomial) {
            kv.emplace_back("alpha", std::to_string(sc.alpha));
            kv.emplace_back("a", fmt_double(sc.a));
            kv.emplace_back("b", fmt_double(sc.b));
        } else {
            kv.emplace_back("a", fmt_double(sc.a));
            kv.emplace_back("a0", fmt_double(sc.a0));
            kv.emplace_back("b", fmt_double(sc.b));
            kv.emplace_back("b0", fmt_double(sc.b0));
        }
    }
    std::string x0;
    for (std::size_t i = 0; i < cfg.problem.initial.size(); ++i)
        x0 += (i ? "," : "") + fmt_double(cfg.problem.initial[i]);
    kv.emplace_back("x0", x0);
    std::string hs;
    for (std::size_t i = 0; i < cfg.horizons.size(); ++i)
        hs += (i ? "," : "") + std::to_string(cfg.horizons[i]);
    kv.emplace_back("horizons", hs);
    std::string ls;
    for (std::size_t i = 0; i < cfg.levels.size(); ++i)
        ls += (i ? "," : "") + std::to_string(cfg.levels[i]);
    kv.emplace_back("levels", ls);
    kv.emplace_back("reference-level", std::to_string(cfg.reference_level));
    kv.emplace_back("blocks", std::to_string(cfg.blocks));
    kv.emplace_back("per-block", std::to_string(cfg.per_block));
    kv.emplace_back("seed", std::to_string(cfg.base_seed));
    kv.emplace_back("scheme", to_string(cfg.scheme));
    kv.emplace_back("sup-over-grid", cfg.sup_over_grid ? "1" : "0");
    kv.emplace_back("kernel", kernels::select_ops(cfg.kernel).name);
    return kv;
}

} // namespace

std::string to_string(Scheme s) {
    return s == Scheme::tamed ? "tamed" : "explicit";
}

void ExperimentConfig::validate() const {
    if (!problem.drift || !problem.diffusion)
        throw std::invalid_argument("config: problem has no coefficient functions");
    if (static_cast<int>(problem.initial.size()) != problem.state_dim)
        throw std::invalid_argument("config: initial value dimension mismatch");
    if (horizons.empty()) throw std::invalid_argument("config: at least one horizon required");
    for (int T : horizons)
        if (T < 1) throw std::invalid_argument("config: horizons must be positive integers");
    if (levels.empty()) throw std::invalid_argument("config: at least one level required");
    for (std::size_t i = 0; i < levels.size(); ++i) {
        if (levels[i] < 1) throw std::invalid_argument("config: levels must be >= 1");
        if (i > 0 && levels[i] <= levels[i - 1])
            throw std::invalid_argument("config: levels must be strictly increasing");
        if (i > 0 && levels[i] % levels[i - 1] != 0)
            throw std::invalid_argument("config: each level must divide the next (nested grids)");
        if (reference_level % levels[i] != 0)
            throw std::invalid_argument("config: level " + std::to_string(levels[i]) +
                                        " does not divide the reference level " +
                                        std::to_string(reference_level));
    }
    if (blocks < 1 || per_block < 1)
        throw std::invalid_argument("config: blocks and per-block must be >= 1");
    if (workers < 0) throw std::invalid_argument("config: workers must be >= 0");
}

MseResult reduce_mse_summands(std::vector<double> summands) {
    MseResult r;
    double acc = 0.0;
    for (double s : summands) {
        if (std::isnan(s)) {
            ++r.diverged;
        } else {
            acc += s;
            ++r.included;
        }
    }
    r.eps = r.included > 0 ? acc / static_cast<double>(r.included) : kNaN;
    r.summands = std::move(summands);
    return r;
}

MseResult estimate_mse(const ExperimentConfig& config, std::int64_t m, int T) {
    config.validate();
    if (m < 1 || config.reference_level % m != 0)
        throw std::invalid_argument("estimate_mse: m must divide the reference level");
    if (T < 1) throw std::invalid_argument("estimate_mse: T must be a positive integer");
    const std::int64_t levels[1] = {m};
    std::vector<LevelResults> lr = run_levels(config, T, levels);
    return reduce_mse_summands(std::move(lr[0].summand));
}

ConvergenceReport run_convergence_study(const ExperimentConfig& config) {
    config.validate();
    ConvergenceReport report;
    for (int T : config.horizons) {
        std::vector<LevelResults> lr = run_levels(config, T, config.levels);
        HorizonTable table;
        table.horizon = T;
        table.trajectories_used = config.trajectories();
        for (std::size_t i = 0; i < config.levels.size(); ++i) {
            MseResult mr = reduce_mse_summands(std::move(lr[i].summand));
            ConvergenceRow row;
            row.m = config.levels[i];
            row.h = 1.0 / static_cast<double>(row.m);
            row.eps = mr.eps;
            row.diverged = mr.diverged;
            if (i > 0) row.ratio = table.rows.back().eps / mr.eps;
            table.divergence_count += mr.diverged;
            table.rows.push_back(std::move(row));
        }
        std::vector<double> hs, eps;
        for (const ConvergenceRow& row : table.rows) {
            if (row.eps > 0.0 && std::isfinite(row.eps)) {
                hs.push_back(row.h);
                eps.push_back(row.eps);
            }
        }
        if (hs.size() >= 2) {
            table.fitted_order_mse = fit_order(hs, eps);
            table.fitted_strong_order = table.fitted_order_mse / 2.0;
        } else {
            table.fitted_order_mse = kNaN;
            table.fitted_strong_order = kNaN;
        }
        report.tables.push_back(std::move(table));
    }
    return report;
}

MomentReport moment_sweep(const ExperimentConfig& config, std::span<const double> p_values) {
    config.validate();
    if (p_values.empty()) throw std::invalid_argument("moment_sweep: need at least one p");
    for (double p : p_values)
        if (!(p >= 1.0)) throw std::invalid_argument("moment_sweep: p values must be >= 1");

    const int T = config.horizons.front();
    std::vector<MomentLevelData> data = run_moment_levels(config, T);

    MomentReport report;
    report.horizon = T;
    report.sample_size = config.trajectories();
    for (std::size_t li = 0; li < config.levels.size(); ++li) {
        const MomentLevelData& ld = data[li];
        MomentLevelCounts counts;
        counts.m = config.levels[li];
        for (std::uint8_t f : ld.tamed_diverged) counts.tamed_diverged += f;
        for (std::uint8_t f : ld.explicit_diverged) counts.explicit_diverged += f;
        report.counts.push_back(counts);
        for (double p : p_values) {
            MomentEntry e;
            e.m = config.levels[li];
            e.p = p;
            double acc = 0.0;
            std::int64_t used = 0;
            for (double norm : ld.tamed_terminal_norm) {
                if (std::isnan(norm)) continue;
                acc += std::pow(norm, p);
                ++used;
            }
            e.tamed_moment = used > 0 ? acc / static_cast<double>(used) : kNaN;
            report.entries.push_back(e);
        }
    }
    return report;
}

double fit_order(std::span<const double> hs, std::span<const double> eps) {
    if (hs.size() != eps.size() || hs.size() < 2)
        throw std::invalid_argument("fit_order: need equal-length lists of at least two points");
    for (std::size_t i = 0; i < hs.size(); ++i)
        if (!(hs[i] > 0.0) || !(eps[i] > 0.0))
            throw std::invalid_argument("fit_order: entries must be positive");
    const double n = static_cast<double>(hs.size());
    double sx = 0, sy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        sx += std::log2(hs[i]);
        sy += std::log2(eps[i]);
    }
    const double mx = sx / n, my = sy / n;
    double sxx = 0, sxy = 0;
    for (std::size_t i = 0; i < hs.size(); ++i) {
        const double dx = std::log2(hs[i]) - mx;
        sxx += dx * dx;
        sxy += dx * (std::log2(eps[i]) - my);
    }
    if (sxx == 0.0) throw std::invalid_argument("fit_order: step sizes are all equal");
    return sxy / sxx;
}

std::vector<std::string> config_lines(const ExperimentConfig& config) {
    std::vector<std::string> lines;
    for (const auto& [k, v] : config_kv(config)) lines.push_back(k + " = " + v);
    return lines;
}

void write_convergence_csv(const ConvergenceReport& report, const ExperimentConfig& config,
                           std::ostream& os) {
    for (const std::string& line : config_lines(config)) os << "# " << line << "\n";
    os << "step";
    for (const HorizonTable& t : report.tables)
        os << ",eps_T" << t.horizon << ",ratio_T" << t.horizon;
    os << "\n";
    const std::size_t n_rows = report.tables.empty() ? 0 : report.tables.front().rows.size();
    for (std::size_t i = 0; i < n_rows; ++i) {
        os << step_string(report.tables.front().rows[i].m);
        for (const HorizonTable& t : report.tables) {
            const ConvergenceRow& row = t.rows[i];
            os << "," << fmt_eps(row.eps) << ","
               << (row.ratio.has_value() ? fmt_ratio(*row.ratio) : std::string("*"));
        }
        os << "\n";
    }
}

void write_convergence_json(const ConvergenceReport& report, const ExperimentConfig& config,
                            std::ostream& os) {
    nlohmann::ordered_json j;
    for (const auto& [k, v] : config_kv(config)) j["config"][k] = v;
    j["horizons"] = nlohmann::ordered_json::array();
    for (const HorizonTable& t : report.tables) {
        nlohmann::ordered_json jt;
        jt["T"] = t.horizon;
        jt["fitted_order_mse"] = t.fitted_order_mse;
        jt["fitted_strong_order"] = t.fitted_strong_order;
        jt["trajectories_used"] = t.trajectories_used;
        jt["divergence_count"] = t.divergence_count;
        jt["rows"] = nlohmann::ordered_json::array();
        for (const ConvergenceRow& row : t.rows) {
            nlohmann::ordered_json jr;
            jr["m"] = row.m;
            jr["h"] = row.h;
            jr["eps"] = row.eps;
            if (row.ratio.has_value())
                jr["ratio"] = *row.ratio;
            else
                jr["ratio"] = nullptr;
            jr["diverged"] = row.diverged;
            jt["rows"].push_back(std::move(jr));
        }
        j["horizons"].push_back(std::move(jt));
    }
    os << j.dump(2) << "\n";
}

void write_moment_csv(const MomentReport& report, const ExperimentConfig& config,
                      std::span<const double> p_values, std::ostream& os) {
    for (const std::string& line : config_lines(config)) os << "# " << line << "\n";
    std::string ps;
    for (std::size_t i = 0; i < p_values.size(); ++i)
        ps += (i ? "," : "") + fmt_double(p_values[i]);
    os << "# p-values = " << ps << "\n";
    os << "# sample-size = " << report.sample_size << "\n";
    os << "m,p,tamed_moment,tamed_diverged,explicit_diverged\n";
    for (const MomentEntry& e : report.entries) {
        const MomentLevelCounts* counts = nullptr;
        for (const MomentLevelCounts& c : report.counts)
            if (c.m == e.m) counts = &c;
        os << e.m << "," << fmt_double(e.p) << "," << fmt_eps(e.tamed_moment) << ","
           << counts->tamed_diverged << "," << counts->explicit_diverged << "\n";
    }
}

const char* version() { return SEPCA_VERSION; }

} // namespace sepca
