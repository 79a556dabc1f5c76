#include <doctest.h>

#include <cmath>
#include <limits>
#include <vector>

#include "acdlab/diagnostics.hpp"
#include "acdlab/errors.hpp"
#include "acdlab/normal.hpp"
#include "acdlab/parallel.hpp"
#include "acdlab/timechange.hpp"

using namespace acdlab;

TEST_CASE("sample_brownian starts at zero and has the right one-step law") {
    CHECK(sample_brownian(make_uniform_grid(1.0, 10), Seed{0}).values[0] == 0.0);
    CHECK(sample_brownian(make_uniform_grid(3.0, 7), Seed{991}).values[0] == 0.0);

    const TimeGrid g = make_uniform_grid(1.0, 1);
    const std::size_t n = 100000;
    std::vector<double> b1(n);
    parallel_for(n, 0, [&](std::size_t i) {
        b1[i] = sample_brownian(g, derive_path_seed(Seed{321}, i)).values[1];
    });
    CHECK(ks_distance(b1, [](double x) { return normal_cdf(x); }) < 0.02);
}

TEST_CASE("sample_brownian variance at an interior time") {
    const TimeGrid g = make_uniform_grid(1.0, 2);
    const std::size_t n = 100000;
    double sum = 0.0, sumsq = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double v = sample_brownian(g, derive_path_seed(Seed{8}, i)).values[1];
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / n;
    CHECK(sumsq / n - mean * mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("additive_functional identity clock reproduces the grid exactly") {
    // power-of-two h so repeated addition is exact
    const Path b = sample_brownian(make_uniform_grid(1.0, 8), Seed{4});
    const Clock a = additive_functional(b, ClockSpec{[](double) { return 1.0; }, "unit"});
    for (std::size_t k = 0; k < a.values.size(); ++k) {
        CHECK(a.values[k] == a.grid.node(k));
    }
}

TEST_CASE("additive_functional indicator clock never fires below zero") {
    const Path b = make_path(make_uniform_grid(1.0, 4), {-1.0, -1.0, -1.0, -1.0, -1.0});
    const Clock a =
        additive_functional(b, ClockSpec{[](double x) { return x >= 0.0 ? 1.0 : 0.0; }, "occ"});
    for (double v : a.values) CHECK(v == 0.0);
}

TEST_CASE("additive_functional rejects negative integrands") {
    const Path b = make_path(make_uniform_grid(1.0, 4), {0.5, -1.0, 0.5, -1.0, 0.5});
    CHECK_THROWS_AS(additive_functional(b, ClockSpec{[](double x) { return x; }, "bad"}),
                    invariant_violation_error);
}

TEST_CASE("occupation clock of the positive half line has mean one half") {
    const TimeGrid g = make_uniform_grid(1.0, 500);
    const ClockSpec occ{[](double x) { return x >= 0.0 ? 1.0 : 0.0; }, "occ"};
    const std::size_t n = 20000;
    std::vector<double> a1(n);
    parallel_for(n, 0, [&](std::size_t i) {
        a1[i] = additive_functional(sample_brownian(g, derive_path_seed(Seed{21}, i)), occ)
                    .values.back();
    });
    double mean = 0.0;
    for (double v : a1) mean += v;
    mean /= static_cast<double>(n);
    CHECK(mean == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("right_inverse on the identity clock") {
    Clock a;
    a.grid = make_uniform_grid(1.0, 4);
    a.values = {0.0, 0.25, 0.5, 0.75, 1.0};
    CHECK(right_inverse(a, 0.3) == 0.5);  // first node strictly above the level
    CHECK(right_inverse(a, 0.25) == 0.5);
    CHECK(right_inverse(a, 1.0) == kClockNeverExceeds);
}

TEST_CASE("right_inverse of a flat clock is the sentinel") {
    Clock a;
    a.grid = make_uniform_grid(1.0, 2);
    a.values = {0.0, 0.0, 0.0};
    CHECK(right_inverse(a, 0.0) == kClockNeverExceeds);
}

TEST_CASE("right_inverse of a staircase clock") {
    Clock a;
    a.grid = make_uniform_grid(1.0, 4);
    a.values = {0.0, 0.0, 1.0, 1.0, 1.0};  // A = 0 on [0, 0.5), 1 from 0.5
    CHECK(right_inverse(a, 0.2) == 0.5);
    CHECK(right_inverse(a, 0.0) == 0.5);
    CHECK(right_inverse(a, 1.0) == kClockNeverExceeds);
}

TEST_CASE("right_inverse is nondecreasing and locally constant") {
    const Path b = sample_brownian(make_uniform_grid(2.0, 200), Seed{17});
    const Clock a = additive_functional(
        b, ClockSpec{[](double x) { return 1.0 / (1.0 + x * x); }, "smooth"});

    double prev = 0.0;
    for (double t = 0.0; t < a.max(); t += 0.013) {
        const double inv = right_inverse(a, t);
        CHECK(inv >= prev);
        prev = inv;
        // strictly-increasing clock here, so the next breakpoint is at least
        // one grid step of clock away; a tiny probe cannot move the inverse
        CHECK(right_inverse(a, t) == right_inverse(a, t + 1e-12));
    }
}

TEST_CASE("composition bound: clock at the inverse exceeds the level by at most one step") {
    const Path b = sample_brownian(make_uniform_grid(2.0, 400), Seed{23});
    const ClockSpec spec{[](double x) { return 1.0 + 0.5 * std::sin(x); }, "pos"};
    const Clock a = additive_functional(b, spec);
    const double phi_max = 1.5;
    const double h = b.grid.step();

    for (double t = 0.0; t < a.max(); t += 0.0371) {
        const double inv = right_inverse(a, t);
        REQUIRE(inv != kClockNeverExceeds);
        const double a_at_inv = a.values[a.grid.index_at(inv)];
        CHECK(a_at_inv > t);
        CHECK(a_at_inv - t <= phi_max * h + 1e-12);
    }
}

TEST_CASE("time_changed_path with the identity clock reproduces the driver") {
    const TimeGrid g = make_uniform_grid(1.0, 64);
    const Path b = sample_brownian(g, Seed{6});
    const Clock a = additive_functional(b, ClockSpec{[](double) { return 1.0; }, "unit"});
    const TimeGrid out = make_uniform_grid(0.5, 16);
    const Path x = time_changed_path(b, a, out);

    for (std::size_t j = 0; j < out.node_count(); ++j) {
        // T_t = t up to one driver grid step
        const std::size_t k = g.index_at(out.node(j));
        const double shifted = b.values[std::min(k + 1, g.steps())];
        CHECK(x.values[j] == shifted);
    }
}

TEST_CASE("time_changed_path reports clock exhaustion") {
    const TimeGrid g = make_uniform_grid(1.0, 32);
    const Path b = sample_brownian(g, Seed{6});
    const Clock a = additive_functional(b, ClockSpec{[](double) { return 1.0; }, "unit"});
    CHECK_THROWS_AS(time_changed_path(b, a, make_uniform_grid(5.0, 8)), clock_exhausted_error);
}

TEST_CASE("sigma_poisson symmetry in the lattice") {
    for (unsigned n : {1u, 4u, 64u, 256u}) {
        for (double x : {0.03, 0.21, 0.48, 0.77, 1.93}) {
            CHECK(sigma_poisson(n, x) == doctest::Approx(sigma_poisson(n, -x)).epsilon(1e-13));
            CHECK(sigma_poisson(n, x) ==
                  doctest::Approx(sigma_poisson(n, x + 1.0)).epsilon(1e-13));
        }
    }
}

TEST_CASE("sigma_poisson inverse square integrates to one over a unit cell") {
    // Simpson quadrature of sigma_n^{-2} over [-1/2, 1/2]; the Gaussian comb
    // concentrates unit mass at each integer
    const unsigned n = 64;
    const std::size_t panels = 4000;
    const double h = 1.0 / static_cast<double>(panels);
    double acc = 0.0;
    for (std::size_t i = 0; i < panels; ++i) {
        const double x0 = -0.5 + h * static_cast<double>(i);
        auto f = [n](double x) {
            const double s = sigma_poisson(n, x);
            return 1.0 / (s * s);
        };
        acc += (h / 6.0) * (f(x0) + 4.0 * f(x0 + 0.5 * h) + f(x0 + h));
    }
    CHECK(acc == doctest::Approx(1.0).epsilon(1e-3));
}

TEST_CASE("sigma_poisson peaks midway between lattice points") {
    const unsigned n = 32;
    const double mid = sigma_poisson(n, 0.5);
    for (double x = 0.0; x < 1.0; x += 0.001) {
        if (std::fabs(x - 0.5) < 1e-9) continue;
        CHECK(sigma_poisson(n, x) <= mid + 1e-12);
    }
}

TEST_CASE("sawtooth distance to the nearest integer") {
    CHECK(sawtooth(0.3) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(sawtooth(0.7) == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(sawtooth(1.5) == 0.5);
    CHECK(sawtooth(-0.25) == doctest::Approx(0.25).epsilon(1e-12));
    CHECK(sawtooth(4.0) == 0.0);
}
