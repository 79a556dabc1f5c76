#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace acdlab {

/// A simulated value left the sane range (|x| > blowup threshold or non-finite).
class numerical_blowup_error : public std::runtime_error {
public:
    numerical_blowup_error(std::size_t step_index, std::size_t path_index, const std::string& what)
        : std::runtime_error(what), step_index_(step_index), path_index_(path_index) {}

    std::size_t step_index() const noexcept { return step_index_; }
    std::size_t path_index() const noexcept { return path_index_; }

private:
    std::size_t step_index_;
    std::size_t path_index_;
};

/// The clock never reached the requested output horizon; the driving path was
/// too short (or the integrand is degenerate). Callers should enlarge the horizon.
class clock_exhausted_error : public std::runtime_error {
public:
    clock_exhausted_error(std::size_t node_index, std::size_t path_index, const std::string& what)
        : std::runtime_error(what), node_index_(node_index), path_index_(path_index) {}

    std::size_t node_index() const noexcept { return node_index_; }
    std::size_t path_index() const noexcept { return path_index_; }
    void set_path_index(std::size_t i) noexcept { path_index_ = i; }

private:
    std::size_t node_index_;
    std::size_t path_index_;
};

/// A statistic could not be formed (e.g. fewer than two qualifying bins).
class insufficient_data_error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A constructed object violated one of its documented invariants.
class invariant_violation_error : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace acdlab
