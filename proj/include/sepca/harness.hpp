#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "sepca/problem.hpp"

namespace sepca {

enum class Scheme { tamed, explicit_euler };
enum class Driver { automatic, batched, generic };

std::string to_string(Scheme s);

/// One Monte Carlo experiment: B blocks of N_b trajectories, one keyed
/// noise stream per (block, trajectory), every step size driven by the
/// same underlying fine path through exact coarsening.
struct ExperimentConfig {
    SepcaProblem problem;             // horizon field overridden per entry of `horizons`
    std::vector<int> horizons{1};     // T values
    std::vector<std::int64_t> levels; // steps-per-unit m, ascending, each divides the next
    std::int64_t reference_level = 1 << 18;
    int blocks = 30;
    int per_block = 100;
    std::uint64_t base_seed = 0;
    Scheme scheme = Scheme::tamed;
    bool sup_over_grid = false; // error over all coarse grid points instead of terminal only
    int workers = 0;            // 0: hardware concurrency; never affects results
    std::string kernel;         // "", "auto", "scalar", "avx2"
    Driver driver = Driver::automatic;

    std::int64_t trajectories() const {
        return static_cast<std::int64_t>(blocks) * per_block;
    }
    void validate() const; // throws std::invalid_argument
};

/// epsilon(T) for one level: the average of ||x(T) - y(T)||^2 over the
/// sample, with per-trajectory summands kept in (block, trajectory)
/// enumeration order. Diverged trajectories hold NaN in `summands`, are
/// excluded from the average and counted in `diverged`.
struct MseResult {
    double eps = 0.0;
    std::vector<double> summands;
    std::int64_t diverged = 0;
    std::int64_t included = 0;
};

/// The estimator of one (m, T) cell of the convergence tables.
MseResult estimate_mse(const ExperimentConfig& config, std::int64_t m, int T);

struct ConvergenceRow {
    std::int64_t m = 0;
    double h = 0.0;
    double eps = 0.0;
    std::optional<double> ratio; // eps[i-1]/eps[i]; absent on the first row
    std::int64_t diverged = 0;
};

struct HorizonTable {
    int horizon = 1;
    std::vector<ConvergenceRow> rows;
    double fitted_order_mse = 0.0;    // slope of log2 eps vs log2 h
    double fitted_strong_order = 0.0; // half the MSE slope
    std::int64_t trajectories_used = 0;
    std::int64_t divergence_count = 0;
};

struct ConvergenceReport {
    std::vector<HorizonTable> tables;
};

ConvergenceReport run_convergence_study(const ExperimentConfig& config);

struct MomentEntry {
    std::int64_t m = 0;
    double p = 0.0;
    double tamed_moment = 0.0; // empirical E||y_{Tm}||^p over non-diverged tamed runs
};

struct MomentLevelCounts {
    std::int64_t m = 0;
    std::int64_t tamed_diverged = 0;
    std::int64_t explicit_diverged = 0;
};

struct MomentReport {
    int horizon = 1;
    std::int64_t sample_size = 0;
    std::vector<MomentEntry> entries;       // ascending (m, p)
    std::vector<MomentLevelCounts> counts;  // ascending m
};

/// Empirical terminal moments of the tamed scheme plus divergence counts
/// of both schemes, per level. Uses the first entry of config.horizons.
MomentReport moment_sweep(const ExperimentConfig& config, std::span<const double> p_values);

/// Ordinary least-squares slope of log2(eps) against log2(h).
/// Rejects nonpositive entries and mismatched lengths.
double fit_order(std::span<const double> hs, std::span<const double> eps);

/// Average of squared terminal errors; the reduction behind MseResult,
/// exposed for direct testing. NaN entries are excluded and counted.
MseResult reduce_mse_summands(std::vector<double> summands);

// Report emission. Output is byte-identical for identical configs; the
// worker count is deliberately not embedded.
void write_convergence_csv(const ConvergenceReport& report, const ExperimentConfig& config,
                           std::ostream& os);
void write_convergence_json(const ConvergenceReport& report, const ExperimentConfig& config,
                            std::ostream& os);
void write_moment_csv(const MomentReport& report, const ExperimentConfig& config,
                      std::span<const double> p_values, std::ostream& os);

/// Resolved `key = value` configuration lines embedded in every output.
std::vector<std::string> config_lines(const ExperimentConfig& config);

/// Build version string (git describe when available).
const char* version();

} // namespace sepca
