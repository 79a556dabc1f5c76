#include "acdlab/processes.hpp"

#include <cmath>
#include <stdexcept>

#include "acdlab/rng.hpp"
#include "acdlab/timechange.hpp"

namespace acdlab {

namespace {

constexpr double kActiveFloor = 1e-2;

} // namespace

double refl_bm_sigma(unsigned n, double x) {
    return std::max(1.0, -static_cast<double>(n) * x);
}

Path refl_bm_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed,
                      const DriverOptions& opts) {
    if (n == 0) throw std::invalid_argument("refl_bm_prelimit: n must be >= 1");
    const double nd = static_cast<double>(n);
    // phi >= kActiveFloor exactly on [ -x_active, inf )
    const double x_active = (1.0 / std::sqrt(kActiveFloor)) / nd;

    auto phi = [nd](double x) {
        const double s = std::max(1.0, -nd * x);
        return 1.0 / (s * s);
    };
    auto dist = [x_active](double x) { return x < -x_active ? -x_active - x : 0.0; };
    return detail::drive_time_change(phi, dist, kActiveFloor,
                                     /*dead_skip=*/false, /*dead_boundary=*/0.0,
                                     out_grid, seed, opts);
}

Path refl_bm_limit(const TimeGrid& out_grid, Seed seed, const DriverOptions& opts) {
    auto phi = [](double x) { return x >= 0.0 ? 1.0 : 0.0; };
    auto dist = [](double x) { return x < 0.0 ? -x : 0.0; };
    return detail::drive_time_change(phi, dist, /*active_floor=*/1.0,
                                     /*dead_skip=*/true, /*dead_boundary=*/0.0,
                                     out_grid, seed, opts);
}

Path poisson_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed,
                      const DriverOptions& opts) {
    if (n == 0) throw std::invalid_argument("poisson_prelimit: n must be >= 1");
    const double nd = static_cast<double>(n);
    // band half-width where phi drops to the active floor around each integer
    const double peak = std::sqrt(nd / M_PI);
    const double band = peak > kActiveFloor
                            ? std::sqrt(std::log(peak / kActiveFloor) / nd)
                            : 0.5;

    auto phi = [n](double x) {
        const double s = sigma_poisson(n, x);
        return 1.0 / (s * s);
    };
    auto dist = [band](double x) {
        const double d = sawtooth(x) - band;
        return d > 0.0 ? d : 0.0;
    };
    return detail::drive_time_change(phi, dist, kActiveFloor,
                                     /*dead_skip=*/false, /*dead_boundary=*/0.0,
                                     out_grid, seed, opts);
}

Path symmetric_poisson(double rate, const TimeGrid& out_grid, Seed seed) {
    if (!(rate > 0.0)) throw std::invalid_argument("symmetric_poisson: rate must be > 0");
    Rng rng(seed);

    Path p;
    p.grid = out_grid;
    p.values.resize(out_grid.node_count());

    double level = 0.0;
    double next_jump = -std::log(rng.uniform01()) / rate;
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        const double t = out_grid.node(k);
        while (next_jump <= t) {
            level += rng.coin() ? 1.0 : -1.0;
            next_jump += -std::log(rng.uniform01()) / rate;
        }
        p.values[k] = level;
    }
    return p;
}

Example2DSample counterexample_2d_prelimit(unsigned n, const TimeGrid& out_grid, Seed seed) {
    if (n == 0) throw std::invalid_argument("counterexample_2d_prelimit: n must be >= 1");
    const double u = Rng(derive_path_seed(seed, 1)).gaussian();
    Path x = poisson_prelimit(n, out_grid, derive_path_seed(seed, 2));

    const double amplitude = sawtooth(static_cast<double>(n) * u);
    for (double& v : x.values) v *= amplitude;

    return Example2DSample{std::move(x), u, std::nullopt};
}

Example2DSample counterexample_2d_limit(const TimeGrid& out_grid, Seed seed) {
    const double u = Rng(derive_path_seed(seed, 1)).gaussian();
    Path x = symmetric_poisson(1.0, out_grid, derive_path_seed(seed, 2));
    const double v = 0.5 * Rng(derive_path_seed(seed, 3)).uniform01();

    for (double& val : x.values) val *= v;
    return Example2DSample{std::move(x), u, v};
}

Path planted_nonac_process(const TimeGrid& out_grid, Seed seed) {
    if (!(out_grid.t_end() > 1.0)) {
        throw std::invalid_argument("planted_nonac_process: out_grid.t_end must exceed 1");
    }
    Rng rng(seed);
    const double u = rng.uniform01();
    const double d = rng.coin() ? 2.0 : -2.0;

    Path p;
    p.grid = out_grid;
    p.values.resize(out_grid.node_count());
    for (std::size_t k = 0; k < p.values.size(); ++k) {
        p.values[k] = out_grid.node(k) < 1.0 ? u : u + d;
    }
    return p;
}

} // namespace acdlab
