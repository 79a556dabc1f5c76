#pragma once

#include <functional>
#include <limits>
#include <span>
#include <string>

#include "acdlab/ensemble.hpp"
#include "acdlab/grid.hpp"
#include "acdlab/seed.hpp"

namespace acdlab {

/// Coefficient pair of dX = sigma(t,X) dW + b(t,X) dt, plus the one-sided
/// Lipschitz constant K claimed for the drift: b(t,y) - b(t,x) <= K (y - x)
/// for x < y. Callables must be safe for concurrent invocation.
struct DiffusionSpec {
    std::function<double(double, double)> sigma;  // (t, x)
    std::function<double(double, double)> drift;  // (t, x)
    double lipschitz_K = 0.0;
    std::string label;
};

struct DriftCheckReport {
    std::size_t tested_pairs = 0;
    // max over tested pairs of (b(t,y) - b(t,x)) - K(y - x); positive = violation
    double worst_violation = -std::numeric_limits<double>::infinity();
    bool pass = false;
};

/// Any |value| beyond this (or non-finite) aborts the path as a blowup.
inline constexpr double kBlowupThreshold = 1e12;

/// Explicit Euler-Maruyama with left-endpoint (Ito) coefficient evaluation:
///   X_{k+1} = X_k + b(t_k, X_k) h + sigma(t_k, X_k) sqrt(h) xi_k.
/// Throws numerical_blowup_error naming the offending step.
Path euler_maruyama(const DiffusionSpec& spec, const TimeGrid& grid, double x0, Seed seed);

/// Lattice scan of the one-sided Lipschitz drift bound over all ordered pairs
/// x < y from grid_points values in [x_lo, x_hi], for each t in t_samples.
DriftCheckReport check_one_sided_lipschitz(const DiffusionSpec& spec,
                                           std::span<const double> t_samples,
                                           double x_lo, double x_hi,
                                           std::size_t grid_points);

/// Path i = euler_maruyama with seed derive_path_seed(master, i).
PathEnsemble simulate_ensemble(const DiffusionSpec& spec, const TimeGrid& grid, double x0,
                               std::size_t n_paths, Seed master, unsigned threads = 0);

} // namespace acdlab
