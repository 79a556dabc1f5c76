#pragma once

#include <cstddef>
#include <vector>

namespace acdlab {

/// Uniform grid on [0, t_end]: nodes t_k = t_end * (k / steps), k = 0..steps.
/// Variable grids are rejected by construction; every path in the system
/// lives on one of these.
class TimeGrid {
public:
    TimeGrid() = default;
    TimeGrid(double t_end, std::size_t steps);

    double t_end() const noexcept { return t_end_; }
    std::size_t steps() const noexcept { return steps_; }
    std::size_t node_count() const noexcept { return steps_ + 1; }
    double step() const noexcept { return t_end_ / static_cast<double>(steps_); }

    double node(std::size_t k) const noexcept {
        return t_end_ * (static_cast<double>(k) / static_cast<double>(steps_));
    }

    /// Largest k with node(k) <= t. Requires 0 <= t <= t_end.
    std::size_t index_at(double t) const;

    friend bool operator==(const TimeGrid&, const TimeGrid&) = default;

private:
    double t_end_ = 1.0;
    std::size_t steps_ = 1;
};

TimeGrid make_uniform_grid(double t_end, std::size_t steps);

/// Sampled cadlag path: values[k] = X at node k. Between nodes the path is
/// evaluated by the right-continuous step rule (jumps stay jumps; linear
/// interpolation would hide them).
struct Path {
    TimeGrid grid;
    std::vector<double> values;
};

/// Validating constructor: length must match the grid, values must be finite.
Path make_path(TimeGrid grid, std::vector<double> values);

/// X_t under the step rule: value at the largest node <= t.
/// Throws std::out_of_range for t outside [0, t_end].
double eval_path(const Path& p, double t);

} // namespace acdlab
