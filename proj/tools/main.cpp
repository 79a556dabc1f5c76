// Batch front end: parse one subcommand, run the pipeline, write the JSON
// report (and optional CSV dumps). Exit status: 0 all checks passed, 1 some
// check failed, 2 invalid configuration, 3 numerical blowup / exhausted clock.

#include <cstdint>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "acdlab/pipelines.hpp"

namespace {

struct CommandArgs {
    CLI::App* app = nullptr;
    std::map<std::string, std::string> values;
    std::map<std::string, CLI::Option*> options;

    CLI::Option* add(const std::string& key, const std::string& help) {
        auto* opt = app->add_option("--" + key, values[key], help);
        options[key] = opt;
        return opt;
    }

    bool given(const std::string& key) const {
        auto it = options.find(key);
        return it != options.end() && it->second->count() > 0;
    }
};

void add_common(CommandArgs& args) {
    args.add("seed", "master seed (required; reproducibility contract)");
    args.add("paths", "number of Monte Carlo paths / samples");
    args.add("t-end", "time horizon");
    args.add("steps", "grid steps on [0, t-end]");
    args.add("threads", "worker threads (0 = hardware)");
    args.add("out", "JSON report path ('-' or empty = stdout)");
    args.add("dump", "CSV dump file prefix");
    args.add("config", "flat key = value config file; flags override");
    args.add("driver-step", "internal driving-path step for time-changed processes");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Monte Carlo lab for one-dimensional diffusions, their "
                 "finite-dimensional limits, and path-coupling diagnostics"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(acdlab::kVersion));

    std::map<std::string, CommandArgs> commands;
    auto make_cmd = [&](const std::string& name, const std::string& desc) -> CommandArgs& {
        CommandArgs& args = commands[name];
        args.app = app.add_subcommand(name, desc);
        add_common(args);
        return args;
    };

    {
        auto& sim = make_cmd("simulate", "Euler-Maruyama ensemble plus drift/moment checks");
        sim.add("model", "bm | ou");
        sim.add("x0", "initial value");
        sim.add("kappa", "ou mean-reversion rate");
        sim.add("theta", "ou long-run level");
        sim.add("sigma", "ou volatility");
        sim.add("K", "one-sided Lipschitz constant for the drift check");
        sim.add("x-lo", "drift check lattice lower end");
        sim.add("x-hi", "drift check lattice upper end");
        sim.add("drift-grid-points", "drift check lattice size");
    }
    {
        auto& ex = make_cmd("example", "canonical example constructions with their checks");
        ex.app->add_option("name", ex.values["name"],
                           "refl-bm | refl-bm-limit | poisson | poisson-limit | "
                           "counterexample-2d | counterexample-2d-limit | planted")
            ->required();
        ex.add("n", "approximation index for pre-limit constructions");
        ex.add("rate", "jump rate for poisson-limit");
        ex.add("ks-threshold", "KS pass threshold");
        ex.add("min-mean-bound", "running-minimum mean bound (refl-bm)");
        ex.add("dip-rate-threshold", "P(min < -0.05) bound (refl-bm-limit)");
        ex.add("mean-tol", "terminal mean tolerance (refl-bm-limit)");
        ex.add("lattice-threshold", "off-lattice rate bound (poisson)");
        ex.add("interjump-tol", "inter-jump mean tolerance (poisson)");
        ex.add("p-zero-tol", "P(X=0) tolerance (poisson-limit)");
        ex.add("jump-mean-tol", "jump count mean tolerance (counterexample-2d-limit)");
    }
    {
        auto& ac = make_cmd("ac-check", "almost-continuity crossing detector");
        ac.add("process", "refl-bm | refl-bm-limit | poisson | poisson-limit | planted | ...");
        ac.add("n", "approximation index when the process needs one");
        ac.add("rate", "rate when the process needs one");
        ac.add("pairs", "number of independent path pairs");
        ac.add("delta", "touch tolerance");
        ac.add("threshold", "rate bound when expect=low");
        ac.add("expect", "low | calibration");
        ac.add("calibration-target", "expected rate when expect=calibration");
        ac.add("calibration-tol", "allowed |rate - target| when expect=calibration");
    }
    {
        auto& iq = make_cmd("ineq-check", "two-time crossing product inequality");
        iq.add("process", "named process");
        iq.add("n", "approximation index");
        iq.add("rate", "rate");
        iq.add("s", "first time");
        iq.add("t", "second time");
        iq.add("a", "split level at s");
        iq.add("b", "lower band left end");
        iq.add("c", "lower band right end");
        iq.add("d", "upper band left end");
        iq.add("e", "upper band right end");
    }
    {
        auto& fd = make_cmd("fdd-test", "two-sample energy-distance permutation test");
        fd.add("process-a", "first named process");
        fd.add("process-b", "second named process");
        fd.add("n-a", "approximation index for process-a");
        fd.add("n-b", "approximation index for process-b");
        fd.add("rate-a", "rate for process-a");
        fd.add("rate-b", "rate for process-b");
        fd.add("times", "comma-separated evaluation times");
        fd.add("permutations", "permutation count");
        fd.add("p-floor", "pass threshold on the p-value");
    }
    {
        auto& lp = make_cmd("lip-check", "conditional-expectation Lipschitz bound");
        lp.add("process", "named process");
        lp.add("n", "approximation index");
        lp.add("rate", "rate");
        lp.add("kappa", "ou mean-reversion rate");
        lp.add("theta", "ou long-run level");
        lp.add("sigma", "ou volatility");
        lp.add("x0", "initial value for bm/ou");
        lp.add("s", "conditioning time");
        lp.add("t", "target time");
        lp.add("bin-width", "regression bin width");
        lp.add("K", "drift Lipschitz constant used for the e^{-Kt} rescaling");
    }
    {
        auto& sc = make_cmd("support-check", "marginal support connectedness");
        sc.add("process", "named process");
        sc.add("n", "approximation index");
        sc.add("rate", "rate");
        sc.add("t", "evaluation time");
        sc.add("resolution", "histogram bin width");
        sc.add("expect", "connected | disconnected");
    }
    {
        auto& mk = make_cmd("markov-probe", "hidden-state probe on the planar pair");
        mk.add("process", "counterexample-2d-limit | counterexample-2d | poisson-v1-control");
        mk.add("n", "approximation index");
        mk.add("t1", "first probe time");
        mk.add("t2", "conditioning time");
        mk.add("t3", "future time");
        mk.add("stratum-tol", "|Y_t2| tolerance defining the zero stratum");
        mk.app->add_flag("--stratify-v", "run the probe inside narrow amplitude strata");
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 2;
    }

    CommandArgs* active = nullptr;
    std::string command;
    for (auto& [name, args] : commands) {
        if (args.app->parsed()) {
            active = &args;
            command = name;
            break;
        }
    }
    if (active == nullptr) {
        std::cerr << "error: no subcommand given\n";
        return 2;
    }

    try {
        // config file fills only keys not given on the command line
        if (active->given("config")) {
            for (const auto& [key, value] :
                 acdlab::parse_config_file(active->values["config"])) {
                const bool given = active->given(key);
                const bool already = active->values.count(key) != 0 &&
                                     !active->values[key].empty();
                if (!given && !(key == "name" && already)) {
                    active->values[key] = value;
                }
            }
        }

        acdlab::RunConfig cfg;
        cfg.command = command;
        for (auto& [key, value] : active->values) {
            if (value.empty() && key != "name") continue;
            if (key == "seed") {
                cfg.seed = std::stoull(value);
                cfg.seed_set = true;
            } else if (key == "paths") {
                cfg.n_paths = std::stoull(value);
            } else if (key == "t-end") {
                cfg.t_end = std::stod(value);
            } else if (key == "steps") {
                cfg.steps = std::stoull(value);
            } else if (key == "threads") {
                cfg.threads = static_cast<unsigned>(std::stoul(value));
            } else if (key == "out") {
                cfg.out_path = value;
            } else if (key == "dump") {
                cfg.dump_prefix = value;
            } else if (key == "config") {
                // handled above
            } else {
                cfg.params[key] = value;
            }
        }
        if (active->app->count("--stratify-v") > 0) cfg.params["stratify-v"] = "true";

        return acdlab::run(cfg, std::cerr);
    } catch (const acdlab::config_error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}
