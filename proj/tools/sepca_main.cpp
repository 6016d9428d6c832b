// sepca: tamed Euler integration of SDEs with piecewise continuous
// arguments, plus the Monte Carlo convergence/moment experiment harness.

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "sepca/assumptions.hpp"
#include "sepca/brownian.hpp"
#include "sepca/harness.hpp"
#include "sepca/kernels.hpp"
#include "sepca/oracle.hpp"
#include "sepca/scheme.hpp"

namespace {

using sepca::ExperimentConfig;
using sepca::SepcaProblem;

struct ProblemOptions {
    std::string family;
    std::int64_t alpha = 3;
    double a = 0.0;
    double a0 = 0.0;
    double b = 0.0;
    double b0 = 0.0;
    double x0 = 0.0;
};

void add_problem_options(CLI::App* cmd, ProblemOptions& po) {
    cmd->add_option("--problem", po.family, "built-in problem family: poly or linear")
        ->required()
        ->check(CLI::IsMember({"poly", "linear"}));
    cmd->add_option("--alpha", po.alpha, "poly: odd drift exponent of -x^alpha");
    cmd->add_option("--a", po.a, "poly: drift gain a of a(x + x([t])); linear: drift on x");
    cmd->add_option("--a0", po.a0, "linear: drift on the delayed state x([t])");
    cmd->add_option("--b", po.b, "poly: diffusion gain b of b(x + x([t])); linear: diffusion on x");
    cmd->add_option("--b0", po.b0, "linear: diffusion on the delayed state");
    cmd->add_option("--x0", po.x0, "initial value");
}

SepcaProblem build_problem(const ProblemOptions& po) {
    if (po.family == "poly")
        return sepca::make_polynomial_problem({po.alpha, po.a, po.b, po.x0});
    return sepca::make_linear_problem(po.a, po.a0, po.b, po.b0, po.x0, 1);
}

std::string trim(const std::string& s) {
    const std::size_t b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return {};
    const std::size_t e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

// Flat `key = value` lines, # comments. Keys match the long flag names.
std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw std::invalid_argument("cannot open config file " + path);
    std::vector<std::pair<std::string, std::string>> kv;
    std::string line;
    int lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = trim(line);
        if (line.empty()) continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw std::invalid_argument(path + ":" + std::to_string(lineno) +
                                        ": expected `key = value`");
        std::string key = trim(line.substr(0, eq));
        std::string value = trim(line.substr(eq + 1));
        if (value.size() >= 2 && ((value.front() == '"' && value.back() == '"') ||
                                  (value.front() == '\'' && value.back() == '\'')))
            value = value.substr(1, value.size() - 2);
        if (key.empty())
            throw std::invalid_argument(path + ":" + std::to_string(lineno) + ": empty key");
        kv.emplace_back(std::move(key), std::move(value));
    }
    return kv;
}

bool truthy(const std::string& v) {
    return v == "1" || v == "true" || v == "yes" || v == "on";
}

// Config-file values become trailing arguments for every key the command
// line does not already carry, so flags always override the file.
std::vector<std::string> merge_config_args(std::vector<std::string> args) {
    std::string config_path;
    for (std::size_t i = 0; i < args.size(); ++i) {
        if (args[i] == "--config" && i + 1 < args.size()) config_path = args[i + 1];
        else if (args[i].rfind("--config=", 0) == 0) config_path = args[i].substr(9);
    }
    if (config_path.empty()) return args;
    for (const auto& [key, value] : parse_config_file(config_path)) {
        const std::string flag = "--" + key;
        bool present = false;
        for (const std::string& a : args)
            if (a == flag || a.rfind(flag + "=", 0) == 0) present = true;
        if (present) continue;
        if (key == "sup-over-grid") {
            if (truthy(value)) args.push_back(flag);
            continue;
        }
        args.push_back(flag);
        args.push_back(value);
    }
    return args;
}

std::vector<int> parse_int_list(const std::string& s, const char* what) {
    std::vector<int> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const int v = std::stoi(item, &pos);
        if (pos != item.size()) throw CLI::ValidationError(what, "bad integer '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

std::vector<double> parse_double_list(const std::string& s, const char* what) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ',')) {
        std::size_t pos = 0;
        const double v = std::stod(item, &pos);
        if (pos != item.size()) throw CLI::ValidationError(what, "bad number '" + item + "'");
        out.push_back(v);
    }
    if (out.empty()) throw CLI::ValidationError(what, "empty list");
    return out;
}

std::int64_t level_from_exponent(int e) {
    if (e < 0 || e > 30)
        throw CLI::ValidationError("--levels", "exponent must be in [0, 30]");
    return std::int64_t{1} << e;
}

// "8:12" denotes m = 2^8..2^12 inclusive; "8,10,12" lists exponents.
std::vector<std::int64_t> parse_levels(const std::string& s) {
    std::vector<std::int64_t> levels;
    const std::size_t colon = s.find(':');
    if (colon != std::string::npos) {
        const int lo = std::stoi(s.substr(0, colon));
        const int hi = std::stoi(s.substr(colon + 1));
        if (hi < lo) throw CLI::ValidationError("--levels", "range must be lo:hi with lo <= hi");
        for (int e = lo; e <= hi; ++e) levels.push_back(level_from_exponent(e));
        return levels;
    }
    for (int e : parse_int_list(s, "--levels")) levels.push_back(level_from_exponent(e));
    return levels;
}

struct ExperimentOptions {
    std::string horizons = "1";
    std::string levels;
    int fine_level = 18;
    int blocks = 30;
    int per_block = 100;
    std::uint64_t seed = 0;
    std::string scheme = "tamed";
    bool sup_over_grid = false;
    int workers = 0;
    std::string kernel = "auto";
    std::string driver = "auto";
};

void add_config_option(CLI::App* cmd) {
    static std::string ignored;
    cmd->add_option("--config", ignored,
                    "configuration file: `key = value` lines with # comments, keys matching "
                    "the long flag names; command-line flags override file values");
}

void add_experiment_options(CLI::App* cmd, ExperimentOptions& eo, ProblemOptions& po) {
    add_config_option(cmd);
    add_problem_options(cmd, po);
    cmd->add_option("--horizons", eo.horizons, "comma list of integer horizons T");
    cmd->add_option("--levels", eo.levels, "step levels as exponents, lo:hi or comma list (m = 2^k)")
        ->required();
    cmd->add_option("--fine-level", eo.fine_level, "reference mesh exponent (m_fine = 2^k per unit time)");
    cmd->add_option("--blocks", eo.blocks, "number of Monte Carlo blocks");
    cmd->add_option("--per-block", eo.per_block, "trajectories per block");
    cmd->add_option("--seed", eo.seed, "base seed of the keyed noise streams")
        ->envname("SEPCA_SEED");
    cmd->add_option("--scheme", eo.scheme, "scheme under test")
        ->check(CLI::IsMember({"tamed", "explicit"}));
    cmd->add_flag("--sup-over-grid", eo.sup_over_grid,
                  "measure max error over coarse grid points instead of the terminal error");
    cmd->add_option("--workers", eo.workers, "worker thread cap (0 = available parallelism)");
    cmd->add_option("--kernel", eo.kernel, "arithmetic backend: auto, scalar or avx2");
    cmd->add_option("--driver", eo.driver, "trajectory driver: auto, batched or generic")
        ->check(CLI::IsMember({"auto", "batched", "generic"}));
}

ExperimentConfig build_config(const ExperimentOptions& eo, const ProblemOptions& po) {
    ExperimentConfig cfg;
    cfg.problem = build_problem(po);
    cfg.horizons = parse_int_list(eo.horizons, "--horizons");
    cfg.levels = parse_levels(eo.levels);
    cfg.reference_level = level_from_exponent(eo.fine_level);
    cfg.blocks = eo.blocks;
    cfg.per_block = eo.per_block;
    cfg.base_seed = eo.seed;
    cfg.scheme = eo.scheme == "tamed" ? sepca::Scheme::tamed : sepca::Scheme::explicit_euler;
    cfg.sup_over_grid = eo.sup_over_grid;
    cfg.workers = eo.workers;
    cfg.kernel = eo.kernel;
    cfg.driver = eo.driver == "batched"   ? sepca::Driver::batched
                 : eo.driver == "generic" ? sepca::Driver::generic
                                          : sepca::Driver::automatic;
    cfg.validate();
    return cfg;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::runtime_error("cannot open output file " + path.string());
    os << contents;
    if (!os) throw std::runtime_error("write failed for " + path.string());
}

void echo_config(const ExperimentConfig& cfg) {
    for (const std::string& line : sepca::config_lines(cfg)) std::cout << line << "\n";
}

int cmd_converge(const ExperimentOptions& eo, const ProblemOptions& po, const std::string& out) {
    const ExperimentConfig cfg = build_config(eo, po);
    const sepca::ConvergenceReport report = sepca::run_convergence_study(cfg);

    std::ostringstream csv;
    sepca::write_convergence_csv(report, cfg, csv);
    write_file(out, csv.str());
    std::ostringstream json;
    sepca::write_convergence_json(report, cfg, json);
    std::filesystem::path json_path(out);
    json_path.replace_extension(".json");
    write_file(json_path, json.str());

    echo_config(cfg);
    for (const sepca::HorizonTable& t : report.tables)
        std::cout << "T=" << t.horizon << " fitted_order_mse=" << t.fitted_order_mse
                  << " fitted_strong_order=" << t.fitted_strong_order
                  << " diverged=" << t.divergence_count << "\n";
    std::cout << "wrote " << out << " and " << json_path.string() << "\n";
    return 0;
}

int cmd_moments(const ExperimentOptions& eo, const ProblemOptions& po, const std::string& out,
                const std::string& p_list) {
    const ExperimentConfig cfg = build_config(eo, po);
    const std::vector<double> ps = parse_double_list(p_list, "--p-values");
    const sepca::MomentReport report = sepca::moment_sweep(cfg, ps);

    std::ostringstream csv;
    sepca::write_moment_csv(report, cfg, ps, csv);
    write_file(out, csv.str());

    echo_config(cfg);
    for (const sepca::MomentLevelCounts& c : report.counts)
        std::cout << "m=" << c.m << " tamed_diverged=" << c.tamed_diverged
                  << " explicit_diverged=" << c.explicit_diverged << "\n";
    std::cout << "wrote " << out << "\n";
    return 0;
}

int cmd_validate(const ProblemOptions& po, double box_radius, std::int64_t samples,
                 std::uint64_t seed, const std::string& out) {
    const SepcaProblem problem = build_problem(po);
    const sepca::AssumptionReport rep = sepca::check_assumptions(problem, box_radius, samples, seed);

    nlohmann::ordered_json j;
    j["version"] = sepca::version();
    j["problem"] = problem.name;
    j["box_radius"] = rep.box_radius;
    j["samples"] = rep.samples_used;
    j["seed"] = seed;
    j["k_diffusion_lipschitz"] = rep.k_diffusion_lipschitz;
    j["k_one_sided"] = rep.k_one_sided;
    j["k_delay_lipschitz"] = rep.k_delay_lipschitz;
    j["growth_k"] = rep.growth_k;
    j["growth_c"] = rep.growth_c;
    j["violations"] = nlohmann::ordered_json::array();
    for (const sepca::AssumptionWitness& w : rep.violations) {
        nlohmann::ordered_json jw;
        jw["condition"] = sepca::to_string(w.condition);
        jw["quotient"] = w.quotient;
        jw["x1"] = w.x1;
        jw["y1"] = w.y1;
        jw["x2"] = w.x2;
        jw["y2"] = w.y2;
        j["violations"].push_back(std::move(jw));
    }
    const std::string text = j.dump(2) + "\n";
    if (out.empty())
        std::cout << text;
    else
        write_file(out, text);
    if (!rep.violations.empty())
        std::cerr << "warning: " << rep.violations.size()
                  << " condition violation(s) detected; see the report\n";
    return 0;
}

int cmd_simulate(const ProblemOptions& po, int level_exp, int horizon, std::uint64_t seed,
                 const std::string& scheme, const std::string& out, const std::string& dump_path) {
    const SepcaProblem problem = build_problem(po).with_horizon(horizon);
    const std::int64_t m = level_from_exponent(level_exp);
    const sepca::SeedValue sv{seed, 0, 0};
    const sepca::BrownianGrid path = sepca::generate_fine_path(sv, problem.noise_dim, horizon, m);
    const sepca::Trajectory traj = scheme == "tamed"
                                       ? sepca::simulate_tamed(problem, path)
                                       : sepca::simulate_explicit_euler(problem, path);

    std::ostringstream header;
    header << "# version = " << sepca::version() << "\n"
           << "# problem = " << problem.name << "\n"
           << "# level = " << m << "\n"
           << "# horizon = " << horizon << "\n"
           << "# seed = " << seed << "\n"
           << "# scheme = " << scheme << "\n";

    if (!dump_path.empty()) {
        std::ofstream os(dump_path, std::ios::binary);
        if (!os) throw std::runtime_error("cannot open " + dump_path);
        sepca::write_path_dump(path, os);
    }
    if (!out.empty()) {
        std::ostringstream csv;
        csv << header.str() << "step,t";
        for (int i = 1; i <= problem.state_dim; ++i) csv << ",y_" << i;
        csv << "\n";
        char buf[40];
        for (std::int64_t n = 0; n < traj.stored_points(); ++n) {
            csv << n << ",";
            std::snprintf(buf, sizeof(buf), "%.17g", static_cast<double>(n) * path.step_size());
            csv << buf;
            for (double v : traj.value(n)) {
                std::snprintf(buf, sizeof(buf), "%.17g", v);
                csv << "," << buf;
            }
            csv << "\n";
        }
        write_file(out, csv.str());
    }

    std::cout << header.str();
    if (traj.diverged_at.has_value()) {
        std::cout << "diverged_at = " << *traj.diverged_at << "\n";
    } else {
        std::cout << "terminal =";
        for (double v : traj.terminal()) {
            char buf[40];
            std::snprintf(buf, sizeof(buf), "%.17g", v);
            std::cout << " " << buf;
        }
        std::cout << "\n";
    }
    if (!out.empty()) std::cout << "wrote " << out << "\n";
    if (!dump_path.empty()) std::cout << "wrote " << dump_path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tamed Euler scheme for SDEs with piecewise continuous arguments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", sepca::version());

    ProblemOptions po_converge, po_moments, po_validate, po_simulate;
    ExperimentOptions eo_converge, eo_moments;
    std::string out_converge, out_moments, out_validate, out_simulate, dump_path, p_values = "2";
    double box_radius = 10.0;
    std::int64_t samples = 10000;
    std::uint64_t validate_seed = 0, simulate_seed = 0;
    int sim_level = 12, sim_horizon = 1;
    std::string sim_scheme = "tamed";

    CLI::App* converge =
        app.add_subcommand("converge", "run the strong-convergence table experiment");
    add_experiment_options(converge, eo_converge, po_converge);
    converge->add_option("--out", out_converge, "output CSV path (a .json summary is written beside it)")
        ->required();

    CLI::App* moments = app.add_subcommand("moments", "empirical terminal moment sweep");
    add_experiment_options(moments, eo_moments, po_moments);
    moments->add_option("--p-values", p_values, "comma list of moment orders p >= 1");
    moments->add_option("--out", out_moments, "output CSV path")->required();

    CLI::App* validate = app.add_subcommand("validate", "sample the coefficient conditions on a box");
    add_config_option(validate);
    add_problem_options(validate, po_validate);
    validate->add_option("--box-radius", box_radius, "half-width of the sampled box");
    validate->add_option("--samples", samples, "number of sampled point tuples");
    validate->add_option("--seed", validate_seed, "sampling seed")->envname("SEPCA_SEED");
    validate->add_option("--out", out_validate, "write the JSON report here instead of stdout");

    CLI::App* simulate = app.add_subcommand("simulate", "integrate one trajectory");
    add_config_option(simulate);
    add_problem_options(simulate, po_simulate);
    simulate->add_option("--level", sim_level, "step level exponent (m = 2^k)");
    simulate->add_option("--horizon", sim_horizon, "integer horizon T");
    simulate->add_option("--seed", simulate_seed, "noise stream seed")->envname("SEPCA_SEED");
    simulate->add_option("--scheme", sim_scheme, "tamed or explicit")
        ->check(CLI::IsMember({"tamed", "explicit"}));
    simulate->add_option("--out", out_simulate, "trajectory CSV path (step,t,y_1..y_d)");
    simulate->add_option("--dump-path", dump_path, "binary Brownian path dump");

    try {
        std::vector<std::string> args = merge_config_args({argv + 1, argv + argc});
        std::vector<const char*> argp;
        argp.push_back(argv[0]);
        for (const std::string& a : args) argp.push_back(a.c_str());
        app.parse(static_cast<int>(argp.size()), argp.data());
        if (converge->parsed()) return cmd_converge(eo_converge, po_converge, out_converge);
        if (moments->parsed()) return cmd_moments(eo_moments, po_moments, out_moments, p_values);
        if (validate->parsed())
            return cmd_validate(po_validate, box_radius, samples, validate_seed, out_validate);
        if (simulate->parsed())
            return cmd_simulate(po_simulate, sim_level, sim_horizon, simulate_seed, sim_scheme,
                                out_simulate, dump_path);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
}
