#include "acdlab/pipelines.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <iostream>
#include <optional>
#include <sstream>

#include <json.hpp>

#include "acdlab/errors.hpp"
#include "acdlab/normal.hpp"
#include "acdlab/parallel.hpp"
#include "acdlab/processes.hpp"
#include "acdlab/rng.hpp"
#include "acdlab/sde.hpp"
#include "acdlab/timechange.hpp"

namespace acdlab {

namespace {

using nlohmann::json;

constexpr double kZ99 = 2.5758293035489004;

// ---------------------------------------------------------------------------
// config access

double to_double(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw config_error("parameter '" + key + "': cannot parse '" + raw + "' as a number");
    }
}

std::uint64_t to_u64(const std::string& key, const std::string& raw) {
    try {
        std::size_t pos = 0;
        const unsigned long long v = std::stoull(raw, &pos);
        if (pos != raw.size()) throw std::invalid_argument(raw);
        return v;
    } catch (const std::exception&) {
        throw config_error("parameter '" + key + "': cannot parse '" + raw + "' as an integer");
    }
}

} // namespace

bool RunConfig::has_param(const std::string& key) const { return params.count(key) != 0; }

double RunConfig::param_double(const std::string& key, double fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : to_double(key, it->second);
}

double RunConfig::require_double(const std::string& key) const {
    auto it = params.find(key);
    if (it == params.end()) throw config_error("missing required parameter '" + key + "'");
    return to_double(key, it->second);
}

std::uint64_t RunConfig::param_u64(const std::string& key, std::uint64_t fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : to_u64(key, it->second);
}

std::string RunConfig::param_str(const std::string& key, const std::string& fallback) const {
    auto it = params.find(key);
    return it == params.end() ? fallback : it->second;
}

namespace {

// ---------------------------------------------------------------------------
// small numerics shared by the pipelines

double bessel_i0(double x) {
    const double q = 0.25 * x * x;
    double term = 1.0, sum = 1.0;
    for (int k = 1; k < 500; ++k) {
        term *= q / (static_cast<double>(k) * static_cast<double>(k));
        sum += term;
        if (term < 1e-18 * sum) break;
    }
    return sum;
}

struct Moments {
    double mean = 0.0;
    double var = 0.0;
    double se_mean = 0.0;
    double se_var = 0.0;
    std::size_t n = 0;
};

Moments moments(const std::vector<double>& xs) {
    Moments m;
    m.n = xs.size();
    if (m.n == 0) return m;
    const double dn = static_cast<double>(m.n);
    for (double x : xs) m.mean += x;
    m.mean /= dn;
    double m2 = 0.0, m4 = 0.0;
    for (double x : xs) {
        const double d = x - m.mean;
        m2 += d * d;
        m4 += d * d * d * d;
    }
    m2 /= dn;
    m4 /= dn;
    m.var = m2;
    m.se_mean = std::sqrt(m2 / dn);
    m.se_var = std::sqrt(std::max(0.0, m4 - m2 * m2) / dn);
    return m;
}

DiagnosticReport make_record(std::string name, double value, double ci, double threshold,
                             bool pass, std::size_t n) {
    DiagnosticReport r;
    r.statistic_name = std::move(name);
    r.value = value;
    r.ci_halfwidth = ci;
    r.threshold = threshold;
    r.pass = pass;
    r.sample_size = n;
    return r;
}

// value must stay below threshold
DiagnosticReport below_record(std::string name, double value, double ci, double threshold,
                              std::size_t n) {
    return make_record(std::move(name), value, ci, threshold, value < threshold, n);
}

// ---------------------------------------------------------------------------
// deterministic streaming with first-failure bookkeeping

struct PathFailure {
    enum class Kind { none, blowup, clock } kind = Kind::none;
    std::size_t aux = 0;  // step or output node index
    std::string message;
};

template <typename MakeFn, typename ConsumeFn>
void stream_paths(std::size_t n_paths, Seed master, unsigned threads, MakeFn&& make_one,
                  ConsumeFn&& consume) {
    std::vector<PathFailure> failures(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        try {
            consume(i, make_one(derive_path_seed(master, i)));
        } catch (const numerical_blowup_error& e) {
            failures[i] = {PathFailure::Kind::blowup, e.step_index(), e.what()};
        } catch (const clock_exhausted_error& e) {
            failures[i] = {PathFailure::Kind::clock, e.node_index(), e.what()};
        }
    });
    for (std::size_t i = 0; i < n_paths; ++i) {  // first failing index, deterministically
        if (failures[i].kind == PathFailure::Kind::blowup) {
            throw numerical_blowup_error(failures[i].aux, i, failures[i].message);
        }
        if (failures[i].kind == PathFailure::Kind::clock) {
            throw clock_exhausted_error(failures[i].aux, i, failures[i].message);
        }
    }
}

// ---------------------------------------------------------------------------
// named process registry

struct ProcessFactory {
    std::function<Path(Seed)> make;
    std::string tag;
};

DiffusionSpec ou_spec(double kappa, double theta, double sigma) {
    DiffusionSpec spec;
    spec.sigma = [sigma](double, double) { return sigma; };
    spec.drift = [kappa, theta](double, double x) { return kappa * (theta - x); };
    spec.lipschitz_K = 0.0;  // decreasing drift
    spec.label = "ou";
    return spec;
}

DiffusionSpec bm_spec() {
    DiffusionSpec spec;
    spec.sigma = [](double, double) { return 1.0; };
    spec.drift = [](double, double) { return 0.0; };
    spec.lipschitz_K = 0.0;
    spec.label = "bm";
    return spec;
}

// suffix is "" or "-a"/"-b" so fdd-test can name two processes
ProcessFactory make_process_factory(const RunConfig& cfg, const TimeGrid& grid,
                                    const std::string& suffix) {
    const std::string name = cfg.param_str("process" + suffix, "");
    if (name.empty()) throw config_error("missing required parameter 'process" + suffix + "'");

    DriverOptions driver;
    driver.step = cfg.param_double("driver-step", 0.0);

    if (name == "refl-bm") {
        const auto n = static_cast<unsigned>(cfg.param_u64("n" + suffix, 0));
        if (n == 0) throw config_error("process refl-bm needs --n" + suffix + " >= 1");
        return {[=](Seed s) { return refl_bm_prelimit(n, grid, s, driver); },
                "refl-bm(n=" + std::to_string(n) + ")"};
    }
    if (name == "refl-bm-limit") {
        return {[=](Seed s) { return refl_bm_limit(grid, s, driver); }, "refl-bm-limit"};
    }
    if (name == "poisson") {
        const auto n = static_cast<unsigned>(cfg.param_u64("n" + suffix, 0));
        if (n == 0) throw config_error("process poisson needs --n" + suffix + " >= 1");
        return {[=](Seed s) { return poisson_prelimit(n, grid, s, driver); },
                "poisson(n=" + std::to_string(n) + ")"};
    }
    if (name == "poisson-limit") {
        const double rate = cfg.param_double("rate" + suffix, 1.0);
        if (!(rate > 0.0)) throw config_error("poisson-limit needs rate > 0");
        return {[=](Seed s) { return symmetric_poisson(rate, grid, s); },
                "poisson-limit(rate=" + std::to_string(rate) + ")"};
    }
    if (name == "planted") {
        return {[=](Seed s) { return planted_nonac_process(grid, s); }, "planted"};
    }
    if (name == "brownian") {
        return {[=](Seed s) { return sample_brownian(grid, s); }, "brownian"};
    }
    if (name == "abs-brownian") {
        return {[=](Seed s) {
                    Path p = sample_brownian(grid, s);
                    for (double& v : p.values) v = std::fabs(v);
                    return p;
                },
                "abs-brownian"};
    }
    if (name == "bm") {
        const double x0 = cfg.param_double("x0", 0.0);
        return {[=, spec = bm_spec()](Seed s) { return euler_maruyama(spec, grid, x0, s); },
                "bm"};
    }
    if (name == "ou") {
        const double kappa = cfg.param_double("kappa", 1.0);
        const double theta = cfg.param_double("theta", 0.0);
        const double sigma = cfg.param_double("sigma", 1.0);
        const double x0 = cfg.param_double("x0", 0.0);
        return {[=, spec = ou_spec(kappa, theta, sigma)](Seed s) {
                    return euler_maruyama(spec, grid, x0, s);
                },
                "ou"};
    }
    throw config_error("unknown process '" + name + "'");
}

PathEnsemble materialize(const RunConfig& cfg, const TimeGrid& grid,
                         const ProcessFactory& factory) {
    const std::size_t cells = cfg.n_paths * grid.node_count();
    if (cells > 250'000'000) {
        throw config_error("ensemble too large to materialise (" + std::to_string(cells) +
                           " values); reduce --paths or --steps");
    }
    PathEnsemble ens;
    ens.grid = grid;
    ens.master_seed = cfg.seed;
    ens.generator_tag = factory.tag;
    ens.paths.resize(cfg.n_paths);
    stream_paths(cfg.n_paths, Seed{cfg.seed}, cfg.threads, factory.make,
                 [&](std::size_t i, Path p) { ens.paths[i] = std::move(p.values); });
    return ens;
}

// detected level transitions of a near-lattice path: resident level changes
// when the path gets within half a unit of a different integer
std::size_t count_lattice_transitions(const Path& p) {
    std::size_t transitions = 0;
    double resident = std::nearbyint(p.values[0]);
    for (double v : p.values) {
        if (std::fabs(v - resident) >= 0.5) {
            resident = std::nearbyint(v);
            ++transitions;
        }
    }
    return transitions;
}

std::size_t count_value_changes(const Path& p) {
    std::size_t changes = 0;
    for (std::size_t k = 1; k < p.values.size(); ++k) {
        if (p.values[k] != p.values[k - 1]) ++changes;
    }
    return changes;
}

// ---------------------------------------------------------------------------
// per-command pipelines

void run_example(const RunConfig& cfg, std::vector<DiagnosticReport>& records,
                 std::vector<double>& dump_marginal) {
    const std::string name = cfg.param_str("name", "");
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const std::size_t n = cfg.n_paths;

    if (name == "refl-bm" || name == "refl-bm-limit") {
        ProcessFactory factory;
        {
            RunConfig sub = cfg;
            sub.params["process"] = name;
            factory = make_process_factory(sub, grid, "");
        }
        std::vector<double> terminal(n), minima(n);
        stream_paths(n, Seed{cfg.seed}, cfg.threads, factory.make, [&](std::size_t i, Path p) {
            terminal[i] = p.values.back();
            minima[i] = *std::min_element(p.values.begin(), p.values.end());
        });
        dump_marginal = terminal;

        const double scale = std::sqrt(cfg.t_end);
        const double ks = ks_distance(terminal,
                                      [scale](double x) { return half_normal_cdf(x, scale); });
        records.push_back(below_record("ks_terminal_vs_reflected_normal", ks, 0.0,
                                       cfg.param_double("ks-threshold", 0.05), n));

        const Moments mm = moments(minima);
        if (name == "refl-bm") {
            const double bound = cfg.param_double("min-mean-bound", -0.2);
            records.push_back(make_record("running_min_mean", mm.mean, 4.0 * mm.se_mean, bound,
                                          mm.mean + 4.0 * mm.se_mean <= bound, n));
        } else {
            double dips = 0.0;
            for (double v : minima) {
                if (v < -0.05) dips += 1.0;
            }
            const double rate = dips / static_cast<double>(n);
            records.push_back(below_record("running_min_below_-0.05_rate", rate,
                                           kZ99 * std::sqrt(rate * (1 - rate) / n),
                                           cfg.param_double("dip-rate-threshold", 0.01), n));
            const Moments tm = moments(terminal);
            const double expected = std::sqrt(2.0 / M_PI) * scale;
            records.push_back(below_record("terminal_mean_abs_error",
                                           std::fabs(tm.mean - expected), tm.se_mean,
                                           cfg.param_double("mean-tol", 0.01), n));
        }
        return;
    }

    if (name == "poisson") {
        RunConfig sub = cfg;
        sub.params["process"] = "poisson";
        const ProcessFactory factory = make_process_factory(sub, grid, "");
        std::vector<double> terminal(n), transitions(n);
        stream_paths(n, Seed{cfg.seed}, cfg.threads, factory.make, [&](std::size_t i, Path p) {
            terminal[i] = p.values.back();
            transitions[i] = static_cast<double>(count_lattice_transitions(p));
        });
        dump_marginal = terminal;

        double off_lattice = 0.0;
        for (double v : terminal) {
            if (sawtooth(v) > 0.1) off_lattice += 1.0;
        }
        const double rate = off_lattice / static_cast<double>(n);
        records.push_back(below_record("terminal_off_lattice_rate", rate,
                                       kZ99 * std::sqrt(rate * (1 - rate) / n),
                                       cfg.param_double("lattice-threshold", 0.05), n));

        // renewal-rate estimator: observed time over detected transitions.
        // (the mean of completed intervals would carry the inspection bias)
        double total_jumps = 0.0;
        for (double c : transitions) total_jumps += c;
        const double interjump = total_jumps > 0.0
                                     ? (static_cast<double>(n) * cfg.t_end) / total_jumps
                                     : std::numeric_limits<double>::infinity();
        const double se = total_jumps > 0.0 ? interjump / std::sqrt(total_jumps) : 0.0;
        records.push_back(below_record("interjump_mean_abs_error", std::fabs(interjump - 1.0),
                                       se, cfg.param_double("interjump-tol", 0.05), n));

        const Moments tm = moments(terminal);
        records.push_back(below_record("terminal_mean_zscore",
                                       std::fabs(tm.mean) / std::max(tm.se_mean, 1e-300), 0.0,
                                       4.0, n));
        return;
    }

    if (name == "poisson-limit") {
        const double rate = cfg.param_double("rate", 1.0);
        RunConfig sub = cfg;
        sub.params["process"] = "poisson-limit";
        const ProcessFactory factory = make_process_factory(sub, grid, "");
        std::vector<double> terminal(n);
        stream_paths(n, Seed{cfg.seed}, cfg.threads, factory.make,
                     [&](std::size_t i, Path p) { terminal[i] = p.values.back(); });
        dump_marginal = terminal;

        const Moments tm = moments(terminal);
        const double var_target = rate * cfg.t_end;
        records.push_back(below_record("terminal_var_abs_error", std::fabs(tm.var - var_target),
                                       0.0, 3.0 * tm.se_var, n));

        double zeros = 0.0;
        for (double v : terminal) {
            if (v == 0.0) zeros += 1.0;
        }
        const double p_zero = zeros / static_cast<double>(n);
        const double lambda_t = rate * cfg.t_end;
        const double p_zero_exact = std::exp(-lambda_t) * bessel_i0(lambda_t);
        records.push_back(below_record("p_zero_abs_error", std::fabs(p_zero - p_zero_exact),
                                       kZ99 * std::sqrt(p_zero * (1 - p_zero) / n),
                                       cfg.param_double("p-zero-tol", 0.01), n));
        return;
    }

    if (name == "planted") {
        std::vector<double> mid(n);
        std::vector<unsigned char> ok(n, 0);
        stream_paths(n, Seed{cfg.seed}, cfg.threads,
                     [&](Seed s) { return planted_nonac_process(grid, s); },
                     [&](std::size_t i, Path p) {
                         mid[i] = eval_path(p, 0.5);
                         const std::size_t changes = count_value_changes(p);
                         double jump_size = 0.0;
                         for (std::size_t k = 1; k < p.values.size(); ++k) {
                             jump_size = std::max(jump_size,
                                                  std::fabs(p.values[k] - p.values[k - 1]));
                         }
                         ok[i] = (changes == 1 && std::fabs(jump_size - 2.0) < 1e-9) ? 1 : 0;
                     });
        dump_marginal = mid;
        double good = 0.0;
        for (auto v : ok) good += v;
        records.push_back(make_record("single_jump_of_size_two_rate",
                                      good / static_cast<double>(n), 0.0, 1.0,
                                      good == static_cast<double>(n), n));
        const double ks = ks_distance(mid, [](double x) {
            return std::clamp(x, 0.0, 1.0);
        });
        records.push_back(below_record("pre_jump_marginal_ks_vs_uniform", ks, 0.0,
                                       cfg.param_double("ks-threshold", 0.02), n));
        return;
    }

    if (name == "counterexample-2d" || name == "counterexample-2d-limit") {
        const bool limit = name == "counterexample-2d-limit";
        const auto nn = static_cast<unsigned>(cfg.param_u64("n", 0));
        if (!limit && nn == 0) throw config_error("example counterexample-2d needs --n >= 1");

        std::vector<double> jump_counts(n), amp_ok(n);
        stream_paths(
            n, Seed{cfg.seed}, cfg.threads,
            [&](Seed s) {
                return limit ? counterexample_2d_limit(grid, s)
                             : counterexample_2d_prelimit(nn, grid, s);
            },
            [&](std::size_t i, Example2DSample sample) {
                jump_counts[i] = static_cast<double>(count_value_changes(sample.y_path));
                if (limit) {
                    amp_ok[i] = (sample.v_value && *sample.v_value >= 0.0 &&
                                 *sample.v_value <= 0.5)
                                    ? 1.0
                                    : 0.0;
                } else {
                    const double amp = sawtooth(static_cast<double>(nn) * sample.u_value);
                    amp_ok[i] = (amp >= 0.0 && amp <= 0.5) ? 1.0 : 0.0;
                }
            });
        dump_marginal = jump_counts;

        if (limit) {
            const Moments jm = moments(jump_counts);
            records.push_back(below_record("jump_count_mean_abs_error",
                                           std::fabs(jm.mean - cfg.t_end), jm.se_mean,
                                           cfg.param_double("jump-mean-tol", 0.02), n));
        }
        double good = 0.0;
        for (double v : amp_ok) good += v;
        records.push_back(make_record("amplitude_in_range_rate", good / static_cast<double>(n),
                                      0.0, 1.0, good == static_cast<double>(n), n));
        return;
    }

    throw config_error("unknown example '" + name + "'");
}

void run_simulate(const RunConfig& cfg, std::vector<DiagnosticReport>& records,
                  std::optional<PathEnsemble>& dump_ensemble) {
    const std::string model = cfg.param_str("model", "bm");
    const double x0 = cfg.param_double("x0", 0.0);
    const TimeGrid grid(cfg.t_end, cfg.steps);

    DiffusionSpec spec;
    double mean_target = 0.0, var_target = 0.0;
    if (model == "bm") {
        spec = bm_spec();
        mean_target = x0;
        var_target = cfg.t_end;
    } else if (model == "ou") {
        const double kappa = cfg.param_double("kappa", 1.0);
        const double theta = cfg.param_double("theta", 0.0);
        const double sigma = cfg.param_double("sigma", 1.0);
        if (!(kappa > 0.0) || !(sigma > 0.0)) {
            throw config_error("simulate ou: need kappa > 0 and sigma > 0");
        }
        spec = ou_spec(kappa, theta, sigma);
        mean_target = theta + (x0 - theta) * std::exp(-kappa * cfg.t_end);
        var_target = sigma * sigma * (1.0 - std::exp(-2.0 * kappa * cfg.t_end)) / (2.0 * kappa);
    } else {
        throw config_error("unknown simulate model '" + model + "' (use bm or ou)");
    }
    spec.lipschitz_K = cfg.param_double("K", spec.lipschitz_K);

    const PathEnsemble ens = simulate_ensemble(spec, grid, x0, cfg.n_paths, Seed{cfg.seed},
                                               cfg.threads);
    dump_ensemble = ens;

    const std::vector<double> t_samples{0.0, 0.5 * cfg.t_end, cfg.t_end};
    const DriftCheckReport drift = check_one_sided_lipschitz(
        spec, t_samples, cfg.param_double("x-lo", -5.0), cfg.param_double("x-hi", 5.0),
        static_cast<std::size_t>(cfg.param_u64("drift-grid-points", 101)));
    records.push_back(make_record("drift_one_sided_lipschitz_worst_violation",
                                  drift.worst_violation, 0.0, 0.0, drift.pass,
                                  drift.tested_pairs));

    const Moments tm = moments(ens.marginal_at(cfg.t_end));
    records.push_back(below_record("terminal_mean_zscore",
                                   std::fabs(tm.mean - mean_target) /
                                       std::max(tm.se_mean, 1e-300),
                                   0.0, 4.0, ens.size()));
    records.push_back(below_record("terminal_var_abs_error", std::fabs(tm.var - var_target),
                                   0.0, 5.0 * tm.se_var + 1e-12, ens.size()));
}

void run_ac_check(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const ProcessFactory factory = make_process_factory(cfg, grid, "");
    const std::size_t pairs = static_cast<std::size_t>(cfg.param_u64("pairs", cfg.n_paths));
    const double delta = cfg.param_double("delta", 0.01);
    const Seed master{cfg.seed};

    const PairGenerator gen = [&](std::uint64_t i) {
        return std::make_pair(factory.make(derive_path_seed(master, 2 * i)),
                              factory.make(derive_path_seed(master, 2 * i + 1)));
    };

    const std::string expect = cfg.param_str(
        "expect", cfg.param_str("process", "") == "planted" ? "calibration" : "low");
    DiagnosticReport rate = almost_continuity_rate(gen, pairs, delta,
                                                   cfg.param_double("threshold", 0.01),
                                                   cfg.threads);
    if (expect == "calibration") {
        const double target = cfg.param_double("calibration-target", 0.125);
        const double tol = cfg.param_double("calibration-tol", 0.01);
        records.push_back(below_record("ac_rate_calibration_abs_error",
                                       std::fabs(rate.value - target), rate.ci_halfwidth, tol,
                                       rate.sample_size));
    } else if (expect == "low") {
        records.push_back(rate);
    } else {
        throw config_error("ac-check: expect must be 'low' or 'calibration'");
    }
}

void run_ineq_check(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const ProcessFactory factory = make_process_factory(cfg, grid, "");
    const PathEnsemble ens = materialize(cfg, grid, factory);

    const double s = cfg.require_double("s");
    const double t = cfg.require_double("t");
    const InequalityReport rep = crossing_inequality_check(
        ens, s, t, cfg.require_double("a"), cfg.require_double("b"), cfg.require_double("c"),
        cfg.require_double("d"), cfg.require_double("e"));

    records.push_back(make_record("crossing_inequality_lhs_minus_rhs",
                                  rep.lhs_estimate - rep.rhs_estimate,
                                  rep.lhs_ci + rep.rhs_ci, 0.0, rep.satisfied_within_ci,
                                  ens.size()));
}

void run_fdd_test(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const ProcessFactory fa = make_process_factory(cfg, grid, "-a");
    const ProcessFactory fb = make_process_factory(cfg, grid, "-b");

    RunConfig cfg_a = cfg, cfg_b = cfg;
    const PathEnsemble ens_a = materialize(cfg_a, grid, fa);
    cfg_b.seed = derive_path_seed(Seed{cfg.seed}, 0xb).value;  // independent of ensemble a
    const PathEnsemble ens_b = materialize(cfg_b, grid, fb);

    std::vector<double> times;
    {
        std::stringstream ss(cfg.param_str("times", "0.5,1"));
        std::string tok;
        while (std::getline(ss, tok, ',')) {
            if (!tok.empty()) times.push_back(to_double("times", tok));
        }
    }
    if (times.empty()) throw config_error("fdd-test: empty times list");
    std::sort(times.begin(), times.end());

    const std::size_t perms = static_cast<std::size_t>(cfg.param_u64("permutations", 200));
    records.push_back(fdd_two_sample(ens_a, ens_b, times, perms,
                                     derive_path_seed(Seed{cfg.seed}, 0xfdd),
                                     cfg.param_double("p-floor", 0.01), cfg.threads));
}

void run_lip_check(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const ProcessFactory factory = make_process_factory(cfg, grid, "");
    const PathEnsemble ens = materialize(cfg, grid, factory);

    const double s = cfg.param_double("s", 0.5 * cfg.t_end);
    const double t = cfg.param_double("t", cfg.t_end);
    const double bin_width = cfg.param_double("bin-width", 0.1);
    const double K = cfg.param_double("K", 0.0);

    LipschitzOptions opts;
    opts.bootstrap_seed = derive_path_seed(Seed{cfg.seed}, 0x1b);
    opts.threads = cfg.threads;
    const auto g = [](double x) { return std::clamp(x, -1.0, 1.0); };
    records.push_back(conditional_lipschitz_estimate(ens, s, t, g, bin_width, K, opts));
}

void run_support_check(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const ProcessFactory factory = make_process_factory(cfg, grid, "");
    const PathEnsemble ens = materialize(cfg, grid, factory);

    const double t = cfg.param_double("t", cfg.t_end);
    const double resolution = cfg.param_double("resolution", 0.05);
    DiagnosticReport rep = support_connectedness(ens, t, resolution);

    const std::string expect = cfg.param_str("expect", "connected");
    if (expect == "connected") {
        records.push_back(rep);
    } else if (expect == "disconnected") {
        records.push_back(make_record("support_gap_detected", rep.value, 0.0, rep.threshold,
                                      rep.value > rep.threshold, rep.sample_size));
    } else {
        throw config_error("support-check: expect must be 'connected' or 'disconnected'");
    }
}

void run_markov_probe(const RunConfig& cfg, std::vector<DiagnosticReport>& records) {
    const TimeGrid grid(cfg.t_end, cfg.steps);
    const std::string process = cfg.param_str("process", "counterexample-2d-limit");
    const auto nn = static_cast<unsigned>(cfg.param_u64("n", 0));

    std::function<Example2DSample(Seed)> make_sample;
    if (process == "counterexample-2d-limit") {
        make_sample = [&](Seed s) { return counterexample_2d_limit(grid, s); };
    } else if (process == "counterexample-2d") {
        if (nn == 0) throw config_error("markov-probe counterexample-2d needs --n >= 1");
        make_sample = [&](Seed s) { return counterexample_2d_prelimit(nn, grid, s); };
    } else if (process == "poisson-v1-control") {
        // Markov control: the raw symmetric Poisson process with an amplitude
        // frozen at 1, so past jump sizes carry no hidden information
        make_sample = [&](Seed s) {
            return Example2DSample{symmetric_poisson(1.0, grid, s), 0.0, 1.0};
        };
    } else {
        throw config_error("markov-probe: unknown process '" + process + "'");
    }

    std::vector<Example2DSample> samples(cfg.n_paths);
    stream_paths(cfg.n_paths, Seed{cfg.seed}, cfg.threads, make_sample,
                 [&](std::size_t i, Example2DSample s) { samples[i] = std::move(s); });

    const double t1 = cfg.param_double("t1", 0.5);
    const double t2 = cfg.param_double("t2", 1.0);
    const double t3 = cfg.param_double("t3", 2.0);

    MarkovProbeOptions opts;
    opts.stratum_tol = cfg.param_double("stratum-tol", 0.0);

    if (cfg.param_str("stratify-v", "") == "true") {
        // control: condition on the amplitude inside each quantile stratum by
        // rescaling every sample to the stratum-mean amplitude. The law given
        // V is Markov, so the probe must stay quiet. (Bucketing alone is not
        // enough: near V = 0 the relative amplitude spread inside a bucket
        // stays order one and the probe correctly keeps detecting it.)
        std::vector<std::size_t> order(samples.size());
        for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
        std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
            const double va = samples[a].v_value.value_or(0.0);
            const double vb = samples[b].v_value.value_or(0.0);
            return va < vb || (va == vb && a < b);
        });
        const std::size_t n_strata = 8;
        double worst_excess = -std::numeric_limits<double>::infinity();
        std::size_t used = 0;
        for (std::size_t g = 0; g < n_strata; ++g) {
            const std::size_t lo = order.size() * g / n_strata;
            const std::size_t hi = order.size() * (g + 1) / n_strata;
            double v_bar = 0.0;
            std::size_t positives = 0;
            for (std::size_t i = lo; i < hi; ++i) {
                const double v = samples[order[i]].v_value.value_or(0.0);
                if (v > 0.0) {
                    v_bar += v;
                    ++positives;
                }
            }
            if (positives == 0) continue;
            v_bar /= static_cast<double>(positives);

            std::vector<Example2DSample> stratum;
            stratum.reserve(hi - lo);
            for (std::size_t i = lo; i < hi; ++i) {
                const Example2DSample& src = samples[order[i]];
                const double v = src.v_value.value_or(0.0);
                if (v <= 0.0) continue;
                Example2DSample pinned = src;
                const double scale = v_bar / v;
                for (double& val : pinned.y_path.values) val *= scale;
                pinned.v_value = v_bar;
                stratum.push_back(std::move(pinned));
            }
            try {
                const DiagnosticReport r = markov_probe(stratum, t1, t2, t3, opts);
                worst_excess = std::max(worst_excess, r.value - r.ci_halfwidth);
                ++used;
            } catch (const insufficient_data_error&) {
                // thin stratum: nothing to test
            }
        }
        if (used == 0) throw insufficient_data_error("markov-probe: all strata too thin");
        records.push_back(make_record("markov_probe_stratified_worst_excess", worst_excess,
                                      0.0, 0.0, worst_excess <= 0.0, samples.size()));
        return;
    }

    records.push_back(markov_probe(samples, t1, t2, t3, opts));
}

// ---------------------------------------------------------------------------
// report assembly and artifacts

json config_echo(const RunConfig& cfg) {
    json j;
    // worker count is an execution knob, not configuration: reports must be
    // byte-identical across thread counts
    j["seed"] = cfg.seed;
    j["paths"] = cfg.n_paths;
    j["t_end"] = cfg.t_end;
    j["steps"] = cfg.steps;
    json p(json::value_t::object);
    for (const auto& [k, v] : cfg.params) p[k] = v;
    j["params"] = p;
    return j;
}

json record_json(const DiagnosticReport& r) {
    json j;
    j["statistic_name"] = r.statistic_name;
    j["value"] = r.value;
    j["ci_halfwidth"] = r.ci_halfwidth;
    j["threshold"] = r.threshold;
    j["pass"] = r.pass;
    j["sample_size"] = r.sample_size;
    return j;
}

} // namespace

RunOutcome run_pipeline(const RunConfig& cfg) {
    RunOutcome outcome;
    json report;
    report["schema_version"] = kSchemaVersion;
    report["version"] = kVersion;
    report["command"] = cfg.command;
    report["config"] = config_echo(cfg);

    try {
        if (!cfg.seed_set) throw config_error("--seed is required (no wall-clock default)");
        if (cfg.n_paths == 0) throw config_error("--paths must be >= 1");
        if (cfg.steps == 0) throw config_error("--steps must be >= 1");
        if (!(cfg.t_end > 0.0)) throw config_error("--t-end must be > 0");

        std::optional<PathEnsemble> dump_ensemble;
        std::vector<double> dump_marginal;

        if (cfg.command == "simulate") {
            run_simulate(cfg, outcome.records, dump_ensemble);
        } else if (cfg.command == "example") {
            run_example(cfg, outcome.records, dump_marginal);
        } else if (cfg.command == "ac-check") {
            run_ac_check(cfg, outcome.records);
        } else if (cfg.command == "ineq-check") {
            run_ineq_check(cfg, outcome.records);
        } else if (cfg.command == "fdd-test") {
            run_fdd_test(cfg, outcome.records);
        } else if (cfg.command == "lip-check") {
            run_lip_check(cfg, outcome.records);
        } else if (cfg.command == "support-check") {
            run_support_check(cfg, outcome.records);
        } else if (cfg.command == "markov-probe") {
            run_markov_probe(cfg, outcome.records);
        } else {
            throw config_error("unknown command '" + cfg.command + "'");
        }

        outcome.all_pass = true;
        for (const auto& r : outcome.records) outcome.all_pass = outcome.all_pass && r.pass;
        outcome.status = outcome.all_pass ? 0 : 1;
    } catch (const config_error& e) {
        outcome.status = 2;
        report["error"] = {{"type", "invalid_config"}, {"message", e.what()}};
    } catch (const std::invalid_argument& e) {
        outcome.status = 2;
        report["error"] = {{"type", "invalid_config"}, {"message", e.what()}};
    } catch (const numerical_blowup_error& e) {
        outcome.status = 3;
        report["error"] = {{"type", "numerical_blowup"},
                           {"message", e.what()},
                           {"path_index", e.path_index()},
                           {"step_index", e.step_index()}};
    } catch (const clock_exhausted_error& e) {
        outcome.status = 3;
        report["error"] = {{"type", "clock_exhausted"},
                           {"message", e.what()},
                           {"path_index", e.path_index()},
                           {"node_index", e.node_index()}};
    } catch (const insufficient_data_error& e) {
        outcome.status = 3;
        report["error"] = {{"type", "insufficient_data"}, {"message", e.what()}};
    }

    json records = json::array();
    for (const auto& r : outcome.records) records.push_back(record_json(r));
    report["records"] = records;
    report["all_pass"] = outcome.all_pass;
    report["status"] = outcome.status;
    outcome.report_json = report.dump(2);
    return outcome;
}

namespace {

void write_csv_paths(const std::string& prefix, const PathEnsemble& ens, std::ostream& log) {
    const std::string file = prefix + "_paths.csv";
    std::ofstream out(file);
    if (!out) throw config_error("cannot open dump file " + file);
    out << "path_index,t,value\n";
    char buf[64];
    const std::size_t limit = std::min<std::size_t>(ens.size(), 100);
    for (std::size_t i = 0; i < limit; ++i) {
        for (std::size_t k = 0; k < ens.grid.node_count(); ++k) {
            std::snprintf(buf, sizeof buf, "%.17g", ens.grid.node(k));
            out << i << ',' << buf << ',';
            std::snprintf(buf, sizeof buf, "%.17g", ens.paths[i][k]);
            out << buf << '\n';
        }
    }
    log << "dumped " << limit << " paths to " << file << "\n";
}

void write_csv_marginal(const std::string& prefix, double t, const std::vector<double>& xs,
                        std::ostream& log) {
    const std::string file = prefix + "_marginal.csv";
    std::ofstream out(file);
    if (!out) throw config_error("cannot open dump file " + file);
    out << "path_index,t,value\n";
    char buf[64];
    for (std::size_t i = 0; i < xs.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.17g", t);
        out << i << ',' << buf << ',';
        std::snprintf(buf, sizeof buf, "%.17g", xs[i]);
        out << buf << '\n';
    }
    log << "dumped " << xs.size() << " marginal samples to " << file << "\n";
}

} // namespace

int run(const RunConfig& cfg, std::ostream& log) {
    const auto start = std::chrono::steady_clock::now();
    RunOutcome outcome = run_pipeline(cfg);
    const double wall =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

    json report = json::parse(outcome.report_json);
    report["wall_time_seconds"] = wall;
    const std::string text = report.dump(2);

    if (cfg.out_path.empty() || cfg.out_path == "-") {
        std::cout << text << "\n";
    } else {
        std::ofstream out(cfg.out_path);
        if (!out) {
            log << "error: cannot open report file " << cfg.out_path << "\n";
            return 2;
        }
        out << text << "\n";
        log << "report written to " << cfg.out_path << "\n";
    }

    if (!cfg.dump_prefix.empty() && outcome.status != 2) {
        // regenerate the dumpable artifacts for the commands that have them
        try {
            if (cfg.command == "simulate" || cfg.command == "example") {
                const TimeGrid grid(cfg.t_end, cfg.steps);
                RunConfig sub = cfg;
                if (cfg.command == "example") sub.params["process"] = cfg.param_str("name", "");
                if (cfg.command == "simulate") sub.params["process"] = cfg.param_str("model", "bm");
                const auto factory = [&]() {
                    return make_process_factory(sub, grid, "");
                }();
                RunConfig small = sub;
                small.n_paths = std::min<std::size_t>(cfg.n_paths, 100);
                const PathEnsemble ens = materialize(small, grid, factory);
                write_csv_paths(cfg.dump_prefix, ens, log);
                write_csv_marginal(cfg.dump_prefix, cfg.t_end, ens.marginal_at(cfg.t_end), log);
            } else {
                log << "note: --dump has no artifact for command " << cfg.command << "\n";
            }
        } catch (const std::exception& e) {
            log << "dump failed: " << e.what() << "\n";
        }
    }
    return outcome.status;
}

std::vector<std::pair<std::string, std::string>> parse_config_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw config_error("cannot open config file " + path);

    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    auto trim = [](std::string s) {
        const auto b = s.find_first_not_of(" \t\r");
        const auto e = s.find_last_not_of(" \t\r");
        return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
    };
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = trim(line);
        if (line.empty()) continue;
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            throw config_error("config file " + path + ":" + std::to_string(line_no) +
                               ": expected key = value");
        }
        const std::string key = trim(line.substr(0, eq));
        const std::string value = trim(line.substr(eq + 1));
        if (key.empty()) {
            throw config_error("config file " + path + ":" + std::to_string(line_no) +
                               ": empty key");
        }
        out.emplace_back(key, value);
    }
    return out;
}

} // namespace acdlab
