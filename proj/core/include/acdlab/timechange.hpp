#pragma once

#include <functional>
#include <limits>
#include <string>

#include "acdlab/grid.hpp"
#include "acdlab/seed.hpp"

namespace acdlab {

/// Nonnegative clock integrand: the clock is A_t = integral of phi(B_s) ds
/// along the driving path B.
struct ClockSpec {
    std::function<double(double)> integrand;
    std::string label;
};

/// Clock values on the driving path's grid: values[k] = A at node k.
/// Nondecreasing with values[0] = 0 by construction.
struct Clock {
    TimeGrid grid;
    std::vector<double> values;

    double max() const noexcept { return values.empty() ? 0.0 : values.back(); }
};

/// Sentinel returned by right_inverse when the clock never exceeds the level.
inline constexpr double kClockNeverExceeds = std::numeric_limits<double>::infinity();

/// Standard Brownian path on the grid: B_0 = 0, increments N(0, h).
Path sample_brownian(const TimeGrid& grid, Seed seed);

/// Left-endpoint Riemann sum: A_{k+1} = A_k + phi(B_k) h. Throws
/// invariant_violation_error if the integrand goes negative.
Clock additive_functional(const Path& brownian, const ClockSpec& clock);

/// Smallest grid node T with A_T > t (strict), or kClockNeverExceeds if the
/// clock saturates below the level. Saturation is data, not an error.
double right_inverse(const Clock& clock, double t);

/// X_{s_j} = B at right_inverse(A, s_j) for every node of out_grid. Throws
/// clock_exhausted_error (naming the output node) when the clock runs out;
/// the caller should enlarge the driving horizon.
Path time_changed_path(const Path& brownian, const Clock& clock, const TimeGrid& out_grid);

/// sigma_n(x) = (pi/n)^{1/4} (sum_k exp(-n (x+k)^2))^{-1/2}, the lattice-spike
/// diffusion coefficient whose inverse square tends to a sum of unit point
/// masses at the integers. The lattice sum is truncated to |x+k| <= 8/sqrt(n)
/// plus the two nearest integers (relative truncation error below 1e-25).
double sigma_poisson(unsigned n, double x);

/// Distance from x to the nearest integer. Range [0, 1/2].
double sawtooth(double x);

} // namespace acdlab
