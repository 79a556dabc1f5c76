#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "acdlab/grid.hpp"
#include "acdlab/parallel.hpp"
#include "acdlab/seed.hpp"

namespace acdlab {

/// N independent paths on one shared grid. Path i is a pure function of
/// (master_seed, i, generator parameters): regenerating is bit-exact no
/// matter how many threads did the work.
struct PathEnsemble {
    TimeGrid grid;
    std::vector<std::vector<double>> paths;  // paths[i][k]
    std::uint64_t master_seed = 0;
    std::string generator_tag;

    std::size_t size() const noexcept { return paths.size(); }

    Path path(std::size_t i) const { return Path{grid, paths[i]}; }

    /// X_t sample across the ensemble, one value per path.
    std::vector<double> marginal_at(double t) const {
        const std::size_t k = grid.index_at(t);
        std::vector<double> out(paths.size());
        for (std::size_t i = 0; i < paths.size(); ++i) out[i] = paths[i][k];
        return out;
    }
};

/// Materialises an ensemble from a per-seed path factory, parallel over the
/// path index.
inline PathEnsemble make_ensemble(const TimeGrid& grid, std::size_t n_paths, Seed master,
                                  std::string tag,
                                  const std::function<Path(Seed)>& path_fn,
                                  unsigned threads = 0) {
    PathEnsemble ens;
    ens.grid = grid;
    ens.master_seed = master.value;
    ens.generator_tag = std::move(tag);
    ens.paths.resize(n_paths);
    parallel_for(n_paths, threads, [&](std::size_t i) {
        ens.paths[i] = path_fn(derive_path_seed(master, i)).values;
    });
    return ens;
}

/// Streaming map over path index: generate path i from its derived seed,
/// reduce it into caller-owned storage, discard. The workhorse for large-N
/// pipelines where materialising every path would be wasteful.
template <typename PathFn, typename Consume>
void for_each_path(std::size_t n_paths, Seed master, unsigned threads,
                   PathFn&& make_one, Consume&& consume) {
    parallel_for(n_paths, threads, [&](std::size_t i) {
        consume(i, make_one(derive_path_seed(master, i)));
    });
}

} // namespace acdlab
