#include "acdlab/timechange.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

#include "acdlab/errors.hpp"
#include "acdlab/rng.hpp"

namespace acdlab {

Path sample_brownian(const TimeGrid& grid, Seed seed) {
    Rng rng(seed);
    const double sqrt_h = std::sqrt(grid.step());

    Path p;
    p.grid = grid;
    p.values.resize(grid.node_count());
    p.values[0] = 0.0;
    double x = 0.0;
    for (std::size_t k = 1; k < p.values.size(); ++k) {
        x += sqrt_h * rng.gaussian();
        p.values[k] = x;
    }
    return p;
}

Clock additive_functional(const Path& brownian, const ClockSpec& clock) {
    if (!clock.integrand) {
        throw std::invalid_argument("additive_functional: integrand not set");
    }
    const double h = brownian.grid.step();

    Clock a;
    a.grid = brownian.grid;
    a.values.resize(brownian.values.size());
    a.values[0] = 0.0;
    double acc = 0.0;
    for (std::size_t k = 0; k + 1 < brownian.values.size(); ++k) {
        const double rate = clock.integrand(brownian.values[k]);
        if (!(rate >= 0.0)) {
            throw invariant_violation_error("additive_functional: integrand negative at x = " +
                                            std::to_string(brownian.values[k]));
        }
        acc += rate * h;
        a.values[k + 1] = acc;
    }
    return a;
}

double right_inverse(const Clock& clock, double t) {
    auto it = std::upper_bound(clock.values.begin(), clock.values.end(), t);
    if (it == clock.values.end()) return kClockNeverExceeds;
    return clock.grid.node(static_cast<std::size_t>(it - clock.values.begin()));
}

Path time_changed_path(const Path& brownian, const Clock& clock, const TimeGrid& out_grid) {
    if (!(brownian.grid == clock.grid)) {
        throw std::invalid_argument("time_changed_path: driving path and clock grids differ");
    }

    Path x;
    x.grid = out_grid;
    x.values.resize(out_grid.node_count());
    for (std::size_t j = 0; j < x.values.size(); ++j) {
        const double T = right_inverse(clock, out_grid.node(j));
        if (T == kClockNeverExceeds) {
            throw clock_exhausted_error(j, 0,
                                        "time_changed_path: clock exhausted at output node " +
                                            std::to_string(j) + " (t = " +
                                            std::to_string(out_grid.node(j)) + ")");
        }
        x.values[j] = eval_path(brownian, T);
    }
    return x;
}

double sigma_poisson(unsigned n, double x) {
    if (n == 0) throw std::invalid_argument("sigma_poisson: n must be >= 1");
    const double nd = static_cast<double>(n);
    const double window = 8.0 / std::sqrt(nd);

    // integers k with |x + k| <= window, widened to always include the two
    // nearest lattice points
    double k_lo = std::ceil(-x - window);
    double k_hi = std::floor(-x + window);
    const double k_near = std::floor(-x);
    k_lo = std::min(k_lo, k_near);
    k_hi = std::max(k_hi, k_near + 1.0);

    double sum = 0.0;
    for (double k = k_lo; k <= k_hi; k += 1.0) {
        const double d = x + k;
        sum += std::exp(-nd * d * d);
    }
    return std::pow(M_PI / nd, 0.25) / std::sqrt(sum);
}

double sawtooth(double x) {
    const double r = x - std::floor(x);
    return std::min(r, 1.0 - r);
}

} // namespace acdlab
