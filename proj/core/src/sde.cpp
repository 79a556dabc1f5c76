#include "acdlab/sde.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

#include "acdlab/errors.hpp"
#include "acdlab/rng.hpp"

namespace acdlab {

Path euler_maruyama(const DiffusionSpec& spec, const TimeGrid& grid, double x0, Seed seed) {
    if (!spec.sigma || !spec.drift) {
        throw std::invalid_argument("euler_maruyama: spec callables not set");
    }
    if (!std::isfinite(spec.lipschitz_K)) {
        throw std::invalid_argument("euler_maruyama: lipschitz_K must be finite");
    }

    const double h = grid.step();
    const double sqrt_h = std::sqrt(h);
    Rng rng(seed);

    Path p;
    p.grid = grid;
    p.values.resize(grid.node_count());
    p.values[0] = x0;

    double x = x0;
    for (std::size_t k = 0; k < grid.steps(); ++k) {
        const double t = grid.node(k);
        x += spec.drift(t, x) * h + spec.sigma(t, x) * sqrt_h * rng.gaussian();
        if (!std::isfinite(x) || std::fabs(x) > kBlowupThreshold) {
            throw numerical_blowup_error(k + 1, 0,
                                         "euler_maruyama: blowup at step " + std::to_string(k + 1));
        }
        p.values[k + 1] = x;
    }
    return p;
}

DriftCheckReport check_one_sided_lipschitz(const DiffusionSpec& spec,
                                           std::span<const double> t_samples,
                                           double x_lo, double x_hi,
                                           std::size_t grid_points) {
    if (!(x_lo < x_hi)) {
        throw std::invalid_argument("check_one_sided_lipschitz: need x_lo < x_hi");
    }
    if (grid_points < 2) {
        throw std::invalid_argument("check_one_sided_lipschitz: need grid_points >= 2");
    }

    DriftCheckReport report;
    const double dx = (x_hi - x_lo) / static_cast<double>(grid_points - 1);
    std::vector<double> b(grid_points);
    for (double t : t_samples) {
        for (std::size_t i = 0; i < grid_points; ++i) {
            b[i] = spec.drift(t, x_lo + dx * static_cast<double>(i));
        }
        for (std::size_t i = 0; i + 1 < grid_points; ++i) {
            for (std::size_t j = i + 1; j < grid_points; ++j) {
                const double gap = dx * static_cast<double>(j - i);
                const double violation = (b[j] - b[i]) - spec.lipschitz_K * gap;
                if (violation > report.worst_violation) report.worst_violation = violation;
                ++report.tested_pairs;
            }
        }
    }
    report.pass = report.worst_violation <= 0.0;
    return report;
}

PathEnsemble simulate_ensemble(const DiffusionSpec& spec, const TimeGrid& grid, double x0,
                               std::size_t n_paths, Seed master, unsigned threads) {
    if (n_paths == 0) {
        throw std::invalid_argument("simulate_ensemble: n_paths must be >= 1");
    }
    const std::string tag = spec.label.empty() ? std::string("euler_maruyama")
                                               : "euler_maruyama:" + spec.label;
    try {
        return make_ensemble(
            grid, n_paths, master, tag,
            [&](Seed s) { return euler_maruyama(spec, grid, x0, s); }, threads);
    } catch (numerical_blowup_error&) {
        // rerun serially to name the first failing path index deterministically
        for (std::size_t i = 0; i < n_paths; ++i) {
            try {
                (void)euler_maruyama(spec, grid, x0, derive_path_seed(master, i));
            } catch (const numerical_blowup_error& inner) {
                throw numerical_blowup_error(inner.step_index(), i,
                                             "simulate_ensemble: blowup in path " +
                                                 std::to_string(i) + " at step " +
                                                 std::to_string(inner.step_index()));
            }
        }
        throw;
    }
}

} // namespace acdlab
