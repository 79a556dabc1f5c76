#pragma once

#include <optional>

#include "acdlab/grid.hpp"
#include "acdlab/seed.hpp"
#include "acdlab/time_change_driver.hpp"

namespace acdlab {

/// Diffusion coefficient of the reflecting-limit family: max(1, -n x).
double refl_bm_sigma(unsigned n, double x);

/// Time-changed Brownian motion with clock integrand max(1, -n x)^{-2};
/// starts at 0 and converges (in finite-dimensional law) to reflecting
/// Brownian motion as n grows.
Path refl_bm_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed,
                      const DriverOptions& opts = {});

/// The limit construction: Brownian motion time-changed by its occupation
/// clock of [0, infinity). Nonnegative up to grid-resolution slack.
Path refl_bm_limit(const TimeGrid& out_grid, Seed seed, const DriverOptions& opts = {});

/// Time-changed Brownian motion with clock integrand sigma_poisson(n, .)^{-2};
/// marginals concentrate on the integers as n grows.
Path poisson_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed,
                      const DriverOptions& opts = {});

/// Exact event-driven symmetric Poisson process: jump times Exp(rate),
/// jump marks +-1 equally likely, rendered cadlag onto out_grid.
Path symmetric_poisson(double rate, const TimeGrid& out_grid, Seed seed);

/// One sample of the planar pair (Y, Z): Y carries the path, Z == U is frozen.
struct Example2DSample {
    Path y_path;
    double u_value = 0.0;                 // the frozen coordinate Z == U
    std::optional<double> v_value;        // limit amplitude V; absent pre-limit
};

/// Y^n = sawtooth(n U) X^n with X^n = poisson_prelimit(n, ...), U ~ N(0,1).
/// Sub-seeds: U from derive(seed, 1), the X path from derive(seed, 2).
Example2DSample counterexample_2d_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed);

/// Y = V X with X a rate-1 symmetric Poisson process, V ~ Uniform[0, 1/2],
/// U ~ N(0,1), all independent. The amplitude law matches sawtooth's range.
/// Sub-seeds: U from derive(seed, 1), X from derive(seed, 2), V from derive(seed, 3).
Example2DSample counterexample_2d_limit(const TimeGrid& out_grid, Seed seed);

/// Calibration target violating almost-continuity: X_t = U for t < 1 and
/// U + D for t >= 1, with U ~ Uniform(0,1) and D = +-2 equally likely.
/// Requires out_grid.t_end > 1. Two independent copies cross without
/// touching with probability exactly 1/8.
Path planted_nonac_process(const TimeGrid& out_grid, Seed seed);

} // namespace acdlab
