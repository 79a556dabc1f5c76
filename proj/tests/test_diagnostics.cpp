#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <vector>

#include "acdlab/diagnostics.hpp"
#include "acdlab/errors.hpp"
#include "acdlab/normal.hpp"
#include "acdlab/processes.hpp"
#include "acdlab/timechange.hpp"

using namespace acdlab;

namespace {

Path path_from(std::vector<double> values) {
    const std::size_t steps = values.size() - 1;
    return make_path(make_uniform_grid(1.0, steps), std::move(values));
}

PathEnsemble ensemble_from(std::vector<std::vector<double>> rows) {
    PathEnsemble ens;
    ens.grid = make_uniform_grid(1.0, rows.front().size() - 1);
    ens.paths = std::move(rows);
    ens.generator_tag = "manual";
    return ens;
}

} // namespace

TEST_CASE("almost_continuity_scan finds nothing without a sign change") {
    const Path y = path_from({0.0, 0.0, 0.0});
    const Path z = path_from({1.0, 1.0, 1.0});
    CHECK(almost_continuity_scan(y, z, 0.01).events.empty());
}

TEST_CASE("almost_continuity_scan classifies touch versus skip") {
    const Path z = path_from({0.0, 0.0, 0.0});
    {
        const Path y = path_from({-1.0, -0.001, 1.0});
        const CouplingEventLog log = almost_continuity_scan(y, z, 0.01);
        REQUIRE(log.events.size() == 1);
        CHECK(log.events[0].kind == CrossingKind::crossed_with_touch);
        CHECK(log.events[0].direction == CrossingDirection::y_over_z);
        CHECK(log.events[0].s_index == 0);
        CHECK(log.events[0].t_index == 2);
    }
    {
        const Path y = path_from({-1.0, 1.0});
        const Path z2 = path_from({0.0, 0.0});
        const CouplingEventLog log = almost_continuity_scan(y, z2, 0.01);
        REQUIRE(log.events.size() == 1);
        CHECK(log.events[0].kind == CrossingKind::crossed_without_touch);
        CHECK(log.events[0].s_index < log.events[0].t_index);
    }
}

TEST_CASE("almost_continuity_scan is symmetric under swapping the pair") {
    Rng rng(Seed{9001});
    for (int rep = 0; rep < 200; ++rep) {
        std::vector<double> ys(21), zs(21);
        double y = 0.0, z = 0.1;
        for (std::size_t k = 0; k < ys.size(); ++k) {
            ys[k] = y;
            zs[k] = z;
            y += 0.3 * rng.gaussian();
            z += 0.3 * rng.gaussian();
        }
        const Path yp = path_from(ys), zp = path_from(zs);
        const CouplingEventLog a = almost_continuity_scan(yp, zp, 0.05);
        const CouplingEventLog b = almost_continuity_scan(zp, yp, 0.05);
        REQUIRE(a.events.size() == b.events.size());
        // swapping roles mirrors the directions and keeps kinds and indices
        for (const auto& ev : a.events) {
            const auto mirrored = std::find_if(b.events.begin(), b.events.end(), [&](const auto& o) {
                return o.s_index == ev.s_index && o.t_index == ev.t_index &&
                       o.kind == ev.kind && o.direction != ev.direction;
            });
            CHECK(mirrored != b.events.end());
        }
    }
}

TEST_CASE("planted violator calibrates the crossing detector at one eighth") {
    const TimeGrid grid = make_uniform_grid(2.0, 20);
    const Seed master{424242};
    const PairGenerator gen = [&](std::uint64_t i) {
        return std::make_pair(planted_nonac_process(grid, derive_path_seed(master, 2 * i)),
                              planted_nonac_process(grid, derive_path_seed(master, 2 * i + 1)));
    };
    const DiagnosticReport r = almost_continuity_rate(gen, 10000, 0.01);
    // analytic: 1/8 from ordered start times opposite jumps, thinned by the
    // |U_Y - U_Z| <= delta touches
    const double target = 0.125 * (1.0 - 0.0199);
    CHECK(std::fabs(r.value - target) <= r.ci_halfwidth + 1e-12);
    CHECK(std::fabs(r.value - 0.125) <= 0.01);
    CHECK(r.sample_size == 10000);
}

TEST_CASE("crossing_inequality_check degenerate threshold is trivially satisfied") {
    const PathEnsemble ens = ensemble_from({{5.0, 6.0}, {5.5, 4.0}, {5.2, 7.0}, {5.9, 5.1}});
    // a below the whole sample range at s: both sides vanish
    const InequalityReport r = crossing_inequality_check(ens, 0.0, 1.0, 1.0, 3.0, 4.5, 5.0, 8.0);
    CHECK(r.lhs_estimate == 0.0);
    CHECK(r.rhs_estimate == 0.0);
    CHECK(r.satisfied_within_ci);
}

TEST_CASE("crossing_inequality_check flags a crafted violator") {
    // paths below a at s jump into the high band, paths above a drop into the
    // low band: lhs = 1/4, rhs = 0
    std::vector<std::vector<double>> rows;
    for (int i = 0; i < 2000; ++i) {
        if (i % 2 == 0) {
            rows.push_back({-1.0, 3.0});
        } else {
            rows.push_back({1.0, 1.0});
        }
    }
    const PathEnsemble ens = ensemble_from(std::move(rows));
    const InequalityReport r =
        crossing_inequality_check(ens, 0.0, 1.0, 0.0, 0.5, 1.5, 2.5, 3.5);
    CHECK(r.lhs_estimate == doctest::Approx(0.25));
    CHECK(r.rhs_estimate == 0.0);
    CHECK_FALSE(r.satisfied_within_ci);
}

TEST_CASE("crossing_inequality_check is invariant under path relabelling") {
    std::vector<std::vector<double>> rows;
    Rng rng(Seed{5150});
    for (int i = 0; i < 500; ++i) {
        const double xs = rng.gaussian();
        rows.push_back({xs, xs + rng.gaussian()});
    }
    auto reversed = rows;
    std::reverse(reversed.begin(), reversed.end());
    const InequalityReport a = crossing_inequality_check(ensemble_from(std::move(rows)), 0.0,
                                                         1.0, 0.2, -0.5, 0.1, 0.4, 1.3);
    const InequalityReport b = crossing_inequality_check(ensemble_from(std::move(reversed)),
                                                         0.0, 1.0, 0.2, -0.5, 0.1, 0.4, 1.3);
    CHECK(a.lhs_estimate == b.lhs_estimate);
    CHECK(a.rhs_estimate == b.rhs_estimate);
    CHECK(a.satisfied_within_ci == b.satisfied_within_ci);
}

TEST_CASE("crossing_inequality_check rejects a misordered band") {
    const PathEnsemble ens = ensemble_from({{0.0, 0.0}});
    CHECK_THROWS_AS(crossing_inequality_check(ens, 0.0, 1.0, 0.0, 1.0, 0.5, 2.0, 3.0),
                    std::invalid_argument);
    CHECK_THROWS_AS(crossing_inequality_check(ens, 1.0, 0.5, 0.0, 0.0, 0.5, 1.0, 2.0),
                    std::invalid_argument);
}

TEST_CASE("simultaneous_jump_rate fires on identical pairs and stays quiet on independent ones") {
    const TimeGrid grid = make_uniform_grid(1.0, 1000);
    const Seed master{31337};

    const PairGenerator same = [&](std::uint64_t i) {
        const Seed s = derive_path_seed(master, i);
        return std::make_pair(symmetric_poisson(5.0, grid, s), symmetric_poisson(5.0, grid, s));
    };
    CHECK(simultaneous_jump_rate(same, 500, 0.5).value > 0.95);

    const PairGenerator indep = [&](std::uint64_t i) {
        return std::make_pair(symmetric_poisson(1.0, grid, derive_path_seed(master, 2 * i)),
                              symmetric_poisson(1.0, grid, derive_path_seed(master, 2 * i + 1)));
    };
    const DiagnosticReport r = simultaneous_jump_rate(indep, 2000, 0.5);
    CHECK(r.value < 0.01);
    CHECK(r.pass);

    const PairGenerator smooth = [&](std::uint64_t i) {
        return std::make_pair(sample_brownian(grid, derive_path_seed(master, 2 * i)),
                              sample_brownian(grid, derive_path_seed(master, 2 * i + 1)));
    };
    CHECK(simultaneous_jump_rate(smooth, 200, 0.5).value == 0.0);
}

TEST_CASE("ks_distance endpoints") {
    // a point mass against its own CDF step
    std::vector<double> atoms(100, 2.5);
    CHECK(ks_distance(atoms, [](double x) { return x >= 2.5 ? 1.0 : 0.0; }) == 0.0);

    std::vector<double> zeros(1000, 0.0);
    CHECK(ks_distance(zeros, [](double x) { return normal_cdf(x); }) ==
          doctest::Approx(0.5).epsilon(1e-12));

    CHECK_THROWS_AS(ks_distance({}, [](double) { return 0.5; }), insufficient_data_error);
}

TEST_CASE("ks_distance of an exact sample obeys the Kolmogorov bound") {
    const std::size_t n = 100000;
    std::vector<double> xs(n);
    Rng rng(Seed{2718});
    for (double& x : xs) x = rng.gaussian();
    // 1.63 / sqrt(n) is the 99% Kolmogorov quantile; 0.01 leaves slack
    CHECK(ks_distance(xs, [](double x) { return normal_cdf(x); }) < 0.01);
}

TEST_CASE("ks_distance is invariant under a joint monotone transform") {
    std::vector<double> xs(5000);
    Rng rng(Seed{555});
    for (double& x : xs) x = rng.gaussian();

    const double d1 = ks_distance(xs, [](double x) { return normal_cdf(x); });
    std::vector<double> cubed = xs;
    for (double& x : cubed) x = x * x * x;
    const double d2 = ks_distance(cubed, [](double y) { return normal_cdf(std::cbrt(y)); });
    CHECK(d1 == doctest::Approx(d2).epsilon(1e-12));
}

TEST_CASE("fdd permutation test keeps its size under the null") {
    const TimeGrid grid = make_uniform_grid(1.0, 4);
    const std::vector<double> times{0.5, 1.0};
    const std::size_t reps = 300;
    std::size_t rejections = 0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
        auto build = [&](Seed master) {
            PathEnsemble ens;
            ens.grid = grid;
            ens.paths.resize(200);
            for (std::size_t i = 0; i < 200; ++i) {
                ens.paths[i] = sample_brownian(grid, derive_path_seed(master, i)).values;
            }
            return ens;
        };
        const PathEnsemble a = build(Seed{1000 + 2 * rep});
        const PathEnsemble b = build(Seed{1001 + 2 * rep});
        const DiagnosticReport r = fdd_two_sample(a, b, times, 99, Seed{rep}, 0.01);
        if (r.value <= 0.05) ++rejections;
    }
    const double frac = static_cast<double>(rejections) / static_cast<double>(reps);
    CHECK(std::fabs(frac - 0.05) <= 0.03);
}

TEST_CASE("fdd permutation test separates clearly different laws") {
    const TimeGrid grid = make_uniform_grid(1.0, 4);
    PathEnsemble a, b;
    a.grid = b.grid = grid;
    a.paths.resize(500);
    b.paths.resize(500);
    for (std::size_t i = 0; i < 500; ++i) {
        a.paths[i] = sample_brownian(grid, derive_path_seed(Seed{70}, i)).values;
        b.paths[i] = sample_brownian(grid, derive_path_seed(Seed{71}, i)).values;
        for (double& v : b.paths[i]) v = 2.0 * v + 0.5;
    }
    const DiagnosticReport r = fdd_two_sample(a, b, std::vector<double>{0.5, 1.0}, 199, Seed{9});
    CHECK(r.value < 0.01);
    CHECK_FALSE(r.pass);
}

TEST_CASE("conditional_lipschitz_estimate basics") {
    // Brownian ensemble: conditional expectation of a 1-Lipschitz target is a
    // Gaussian smoothing, itself 1-Lipschitz
    const TimeGrid grid = make_uniform_grid(1.0, 8);
    PathEnsemble ens;
    ens.grid = grid;
    const std::size_t n = 20000;
    ens.paths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ens.paths[i] = sample_brownian(grid, derive_path_seed(Seed{60}, i)).values;
    }

    const auto g = [](double x) { return std::clamp(x, -1.0, 1.0); };
    const DiagnosticReport r = conditional_lipschitz_estimate(ens, 0.5, 1.0, g, 0.25, 0.0);
    CHECK(r.pass);
    CHECK(r.value <= 1.0 + r.ci_halfwidth + 0.25);

    // constant target: flat regression up to summation roundoff
    const DiagnosticReport flat =
        conditional_lipschitz_estimate(ens, 0.5, 1.0, [](double) { return 0.7; }, 0.25, 0.0);
    CHECK(flat.value < 1e-9);

    // sign flip leaves the absolute slope unchanged
    const DiagnosticReport neg = conditional_lipschitz_estimate(
        ens, 0.5, 1.0, [&](double x) { return -g(x); }, 0.25, 0.0);
    CHECK(neg.value == doctest::Approx(r.value).epsilon(1e-12));

    PathEnsemble tiny;
    tiny.grid = grid;
    tiny.paths.assign(30, sample_brownian(grid, Seed{3}).values);
    CHECK_THROWS_AS(
        conditional_lipschitz_estimate(tiny, 0.5, 1.0, g, 0.25, 0.0),
        insufficient_data_error);
}

TEST_CASE("conditional_lipschitz_estimate agrees with the Gaussian smoothing oracle") {
    const TimeGrid grid = make_uniform_grid(1.0, 8);
    PathEnsemble ens;
    ens.grid = grid;
    const std::size_t n = 50000;
    ens.paths.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
        ens.paths[i] = sample_brownian(grid, derive_path_seed(Seed{61}, i)).values;
    }
    const double s = 0.5, t = 1.0, dt = t - s;

    // f(x) = E[clamp(X_t) | X_s = x] by Simpson quadrature against the
    // Gaussian transition kernel
    const auto f_exact = [&](double x) {
        const double lo = x - 8.0 * std::sqrt(dt), hi = x + 8.0 * std::sqrt(dt);
        const std::size_t panels = 800;
        const double w = (hi - lo) / static_cast<double>(panels);
        auto integrand = [&](double y) {
            const double z = (y - x) / std::sqrt(dt);
            return std::clamp(y, -1.0, 1.0) * std::exp(-0.5 * z * z) /
                   std::sqrt(2.0 * M_PI * dt);
        };
        double acc = 0.0;
        for (std::size_t i = 0; i < panels; ++i) {
            const double y0 = lo + w * static_cast<double>(i);
            acc += (w / 6.0) * (integrand(y0) + 4.0 * integrand(y0 + 0.5 * w) +
                                integrand(y0 + w));
        }
        return acc;
    };

    // binned means must track the exact conditional expectation in the bulk
    const std::size_t ks_node = grid.index_at(s);
    const std::size_t kt_node = grid.index_at(t);
    const double w = 0.2;
    for (double center = -0.9; center <= 0.9; center += w) {
        double sum = 0.0;
        std::size_t count = 0;
        for (std::size_t i = 0; i < n; ++i) {
            const double xs = ens.paths[i][ks_node];
            if (xs >= center - 0.5 * w && xs < center + 0.5 * w) {
                sum += std::clamp(ens.paths[i][kt_node], -1.0, 1.0);
                ++count;
            }
        }
        REQUIRE(count > 200);
        const double f_hat = sum / static_cast<double>(count);
        CHECK(std::fabs(f_hat - f_exact(center)) < 0.05);
    }

    // and the exact f is a contraction: numerical derivative bounded by one
    for (double x = -2.0; x <= 2.0; x += 0.1) {
        const double slope = (f_exact(x + 1e-4) - f_exact(x - 1e-4)) / 2e-4;
        CHECK(std::fabs(slope) <= 1.0 + 1e-6);
    }
}

TEST_CASE("support_connectedness contrasts connected and lattice supports") {
    PathEnsemble flat;
    flat.grid = make_uniform_grid(1.0, 1);
    flat.paths.assign(1000, {0.3, 0.3});
    CHECK(support_connectedness(flat, 1.0, 0.05).pass);

    PathEnsemble split;
    split.grid = make_uniform_grid(1.0, 1);
    for (int i = 0; i < 1000; ++i) {
        split.paths.push_back({0.0, i % 2 == 0 ? -1.0 : 1.0});
    }
    const DiagnosticReport r = support_connectedness(split, 1.0, 0.05);
    CHECK_FALSE(r.pass);
    CHECK(r.value > 10.0);
}

TEST_CASE("markov_probe flags the hidden amplitude and stays quiet on the control") {
    const TimeGrid grid = make_uniform_grid(2.0, 200);
    const std::size_t n = 20000;

    std::vector<Example2DSample> hidden(n);
    for (std::size_t i = 0; i < n; ++i) {
        hidden[i] = counterexample_2d_limit(grid, derive_path_seed(Seed{8080}, i));
    }
    const DiagnosticReport detected = markov_probe(hidden, 0.5, 1.0, 2.0);
    CHECK(detected.pass);
    CHECK(detected.value > detected.ci_halfwidth);

    std::vector<Example2DSample> control(n);
    for (std::size_t i = 0; i < n; ++i) {
        control[i] = Example2DSample{
            symmetric_poisson(1.0, grid, derive_path_seed(Seed{9090}, i)), 0.0, 1.0};
    }
    const DiagnosticReport quiet = markov_probe(control, 0.5, 1.0, 2.0);
    CHECK_FALSE(quiet.pass);
    CHECK(quiet.value == 0.0);

    CHECK_THROWS_AS(markov_probe(std::span<const Example2DSample>(hidden.data(), 20), 0.5, 1.0,
                                 2.0),
                    insufficient_data_error);
}
