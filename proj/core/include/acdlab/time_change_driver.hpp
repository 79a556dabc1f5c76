#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "acdlab/errors.hpp"
#include "acdlab/grid.hpp"
#include "acdlab/rng.hpp"
#include "acdlab/seed.hpp"

namespace acdlab {

// Streaming sampler for X_t = B_{T_t}, where T is the right-continuous
// inverse of the clock A_t = integral of phi(B_s) ds. Materialising B on a
// fixed horizon does not survive large ensembles: for occupation-type
// clocks the driving time needed to reach a clock level has a stable-1/2
// tail, so every fixed oversampling factor fails a macroscopic fraction of
// paths. The walk is advanced state by state instead:
//
//   - active zone (phi >= active_floor): uniform steps of size `step` with
//     left-endpoint clock accrual, exactly the fixed-grid construction;
//   - slow zone (0 < phi < active_floor): exact Gaussian steps of size
//     dt = step / phi, so each one still advances the clock by about one
//     grid step; dt is capped by (d/4)^2 where d is the distance back to
//     the active region, which keeps the walk from vaulting over it;
//   - dead zone (phi == 0 identically below dead_boundary): the clock is
//     frozen there, so the stretch is compressed to its endpoint, the
//     first passage of the shallow-band edge.
//
// Brownian increments are exactly Gaussian at every step size, so the
// sampled skeleton has the exact law at the visited times; only the clock
// quadrature carries the usual O(h) discretisation error, and the adaptive
// steps confine the extra error to regions where phi is negligible.

struct DriverOptions {
    double step = 0.0;                      // uniform step; 0 = out_grid step
    std::uint64_t max_steps = 200'000'000;  // safety stop per path
};

namespace detail {

// Phi: double -> double, clock integrand, >= 0.
// ActiveDistance: double -> double, 0 inside the active region, else the
// distance to it.
template <typename Phi, typename ActiveDistance>
Path drive_time_change(Phi&& phi, ActiveDistance&& active_distance, double active_floor,
                       bool dead_skip, double dead_boundary,
                       const TimeGrid& out_grid, Seed seed, const DriverOptions& opts) {
    const double h = opts.step > 0.0 ? opts.step : out_grid.step();
    const double sqrt_h = std::sqrt(h);
    const double skip_trigger = dead_boundary - 8.0 * sqrt_h;
    const double skip_target = dead_boundary - 4.0 * sqrt_h;

    Rng rng(seed);

    Path x;
    x.grid = out_grid;
    x.values.resize(out_grid.node_count());
    x.values[0] = 0.0;  // the clock is alive at the origin: T_0 = 0

    double b = 0.0;
    double a = 0.0;
    std::size_t j = 1;
    const std::size_t n_out = out_grid.node_count();

    for (std::uint64_t iter = 0; j < n_out; ++iter) {
        if (iter >= opts.max_steps) {
            throw clock_exhausted_error(j, 0,
                                        "time change driver: step budget exhausted at output node " +
                                            std::to_string(j));
        }

        const double rate = phi(b);
        double dt;
        if (rate >= active_floor) {
            dt = h;
        } else if (rate > 0.0) {
            const double d = active_distance(b);
            const double cap = (d * 0.25) * (d * 0.25);
            dt = h / rate;
            if (dt > cap) dt = cap;
            if (dt < h) dt = h;
        } else {
            if (dead_skip && b <= skip_trigger) {
                // the whole excursion below the band is invisible to X
                b = skip_target;
                continue;
            }
            const double d = active_distance(b);
            const double cap = (d * 0.25) * (d * 0.25);
            dt = cap > h ? cap : h;
        }

        b += std::sqrt(dt) * rng.gaussian();
        a += rate * dt;

        while (j < n_out && a > out_grid.node(j)) {
            x.values[j] = b;
            ++j;
        }
    }
    return x;
}

} // namespace detail

} // namespace acdlab
