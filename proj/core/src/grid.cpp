#include "acdlab/grid.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace acdlab {

TimeGrid::TimeGrid(double t_end, std::size_t steps) : t_end_(t_end), steps_(steps) {
    if (!(t_end > 0.0) || !std::isfinite(t_end)) {
        throw std::invalid_argument("TimeGrid: t_end must be positive and finite");
    }
    if (steps == 0) {
        throw std::invalid_argument("TimeGrid: steps must be >= 1");
    }
}

std::size_t TimeGrid::index_at(double t) const {
    // floor(t / h) with fix-ups so exact node hits resolve to that node.
    double approx = std::floor(t / t_end_ * static_cast<double>(steps_));
    if (approx < 0.0) approx = 0.0;
    std::size_t k = static_cast<std::size_t>(approx);
    if (k > steps_) k = steps_;
    while (k + 1 <= steps_ && node(k + 1) <= t) ++k;
    while (k > 0 && node(k) > t) --k;
    return k;
}

TimeGrid make_uniform_grid(double t_end, std::size_t steps) {
    return TimeGrid(t_end, steps);
}

Path make_path(TimeGrid grid, std::vector<double> values) {
    if (values.size() != grid.node_count()) {
        throw std::invalid_argument("make_path: values length " + std::to_string(values.size()) +
                                    " does not match grid node count " +
                                    std::to_string(grid.node_count()));
    }
    for (double v : values) {
        if (!std::isfinite(v)) {
            throw std::invalid_argument("make_path: non-finite value");
        }
    }
    return Path{grid, std::move(values)};
}

double eval_path(const Path& p, double t) {
    if (!(t >= 0.0) || t > p.grid.t_end()) {
        throw std::out_of_range("eval_path: t outside [0, t_end]");
    }
    return p.values[p.grid.index_at(t)];
}

} // namespace acdlab
