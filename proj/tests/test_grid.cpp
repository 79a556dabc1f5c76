#include <doctest.h>

#include <stdexcept>
#include <vector>

#include "acdlab/grid.hpp"
#include "acdlab/rng.hpp"

using namespace acdlab;

TEST_CASE("make_uniform_grid basic nodes") {
    const TimeGrid g = make_uniform_grid(1.0, 4);
    CHECK(g.node_count() == 5);
    CHECK(g.node(0) == doctest::Approx(0.0));
    CHECK(g.node(1) == doctest::Approx(0.25));
    CHECK(g.node(2) == doctest::Approx(0.5));
    CHECK(g.node(3) == doctest::Approx(0.75));
    CHECK(g.node(4) == 1.0);  // last node hits t_end exactly
    CHECK(g.step() == doctest::Approx(0.25));
}

TEST_CASE("make_uniform_grid single step") {
    const TimeGrid g = make_uniform_grid(2.0, 1);
    CHECK(g.node_count() == 2);
    CHECK(g.node(0) == 0.0);
    CHECK(g.node(1) == 2.0);
}

TEST_CASE("make_uniform_grid rejects bad arguments") {
    CHECK_THROWS_AS(make_uniform_grid(1.0, 0), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_grid(0.0, 4), std::invalid_argument);
    CHECK_THROWS_AS(make_uniform_grid(-1.0, 4), std::invalid_argument);
}

TEST_CASE("eval_path cadlag step rule") {
    const Path p = make_path(make_uniform_grid(1.0, 2), {1.0, 3.0, 5.0});
    CHECK(eval_path(p, 0.5) == 3.0);   // node hit
    CHECK(eval_path(p, 0.49) == 1.0);  // left of the node, step rule
    CHECK(eval_path(p, 0.0) == 1.0);
    CHECK(eval_path(p, 1.0) == 5.0);
    CHECK_THROWS_AS(eval_path(p, 1.2), std::out_of_range);
    CHECK_THROWS_AS(eval_path(p, -0.1), std::out_of_range);
}

TEST_CASE("eval_path is right-continuous at interior nodes") {
    Rng rng(Seed{2024});
    for (int rep = 0; rep < 50; ++rep) {
        const std::size_t steps = 1 + (rng.next_u64() % 37);
        const double t_end = 0.1 + 3.0 * rng.uniform01();
        std::vector<double> vals(steps + 1);
        for (double& v : vals) v = rng.gaussian();
        const Path p = make_path(make_uniform_grid(t_end, steps), vals);

        for (std::size_t k = 0; k + 1 < p.grid.node_count(); ++k) {
            const double t = p.grid.node(k);
            const double eps = 0.25 * p.grid.step();
            CHECK(eval_path(p, t) == vals[k]);
            CHECK(eval_path(p, t + eps) == vals[k]);
        }
        CHECK(eval_path(p, 0.0) == vals[0]);
    }
}

TEST_CASE("make_path validates shape and finiteness") {
    CHECK_THROWS_AS(make_path(make_uniform_grid(1.0, 2), {1.0, 2.0}), std::invalid_argument);
    CHECK_THROWS_AS(make_path(make_uniform_grid(1.0, 1), {1.0, 1.0 / 0.0}),
                    std::invalid_argument);
}
