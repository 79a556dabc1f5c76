#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "acdlab/ensemble.hpp"
#include "acdlab/grid.hpp"
#include "acdlab/processes.hpp"
#include "acdlab/seed.hpp"

namespace acdlab {

enum class CrossingKind { crossed_with_touch, crossed_without_touch };
enum class CrossingDirection { y_over_z, z_over_y };

struct CouplingEvent {
    std::size_t s_index = 0;  // first node with the lower process strictly below
    std::size_t t_index = 0;  // last node with it strictly above
    CrossingKind kind = CrossingKind::crossed_with_touch;
    CrossingDirection direction = CrossingDirection::y_over_z;
};

struct CouplingEventLog {
    std::vector<CouplingEvent> events;
    double delta = 0.0;
    std::size_t pair_count = 0;
};

/// One verdict: `value` compared against `threshold` with `ci_halfwidth` of
/// Monte Carlo slack. The comparison direction is part of the statistic.
struct DiagnosticReport {
    std::string statistic_name;
    double value = 0.0;
    double ci_halfwidth = 0.0;
    double threshold = 0.0;
    bool pass = false;
    std::size_t sample_size = 0;
};

struct InequalityReport {
    double s = 0.0, t = 0.0;
    double a = 0.0, b = 0.0, c = 0.0, d = 0.0, e = 0.0;
    double lhs_estimate = 0.0, rhs_estimate = 0.0;
    double lhs_ci = 0.0, rhs_ci = 0.0;  // 99% normal-approximation halfwidths
    bool satisfied_within_ci = false;
};

/// Produces the i-th independent (Y, Z) pair; must be a pure function of the
/// index so scans parallelise deterministically.
using PairGenerator = std::function<std::pair<Path, Path>(std::uint64_t)>;

/// Nonnegative path functional; by contract reads the path only on [0, s].
using PathWeight = std::function<double(const Path&)>;

/// Order-exchange detector. For each direction it finds the maximal index
/// pair: the first node where one path is strictly below the other and the
/// last node where it is strictly above. If the gap |Y - Z| stays above
/// delta on every interior node the pair exchanged order without touching;
/// otherwise the exchange passed through the delta-band.
CouplingEventLog almost_continuity_scan(const Path& y, const Path& z, double delta);

/// Fraction of independent pairs whose scan shows a crossed_without_touch
/// event with Y passing over Z (the event with roles as labelled; for an
/// i.i.d. pair the mirrored event has the same probability). Binomial 99% CI.
DiagnosticReport almost_continuity_rate(const PairGenerator& gen, std::size_t n_pairs,
                                        double delta, double pass_threshold = 0.01,
                                        unsigned threads = 0);

/// Empirical check of the two-time product inequality
///   E[U 1{Xs<a, d<Xt<e}] E[V 1{Xs>a, b<Xt<c}]
///     <= E[U 1{Xs<a, b<Xt<c}] E[V 1{Xs>a, d<Xt<e}]
/// for b < c <= d < e, with optional nonnegative weights U, V evaluated on
/// the pre-s path (default: constant 1). Verdict allows additive CI slack.
InequalityReport crossing_inequality_check(const PathEnsemble& ens, double s, double t,
                                           double a, double b, double c, double d, double e,
                                           const PathWeight& u_weight = {},
                                           const PathWeight& v_weight = {});

/// Fraction of pairs with a grid step where both paths move by more than
/// jump_threshold simultaneously.
DiagnosticReport simultaneous_jump_rate(const PairGenerator& gen, std::size_t n_pairs,
                                        double jump_threshold, double pass_threshold = 0.01,
                                        unsigned threads = 0);

/// Two-sided Kolmogorov-Smirnov distance between a sample and a reference CDF.
double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& reference_cdf);

/// Energy-distance permutation test of equality of the joint laws of
/// (X_{t_1},...,X_{t_d}) under the two ensembles. The statistic is the sliced
/// energy distance over a fixed direction set, so each permutation costs
/// O(directions * N). pass <=> p >= p_floor when testing "same law".
DiagnosticReport fdd_two_sample(const PathEnsemble& ens_a, const PathEnsemble& ens_b,
                                std::span<const double> times, std::size_t n_permutations,
                                Seed seed, double p_floor = 0.01, unsigned threads = 0);

struct LipschitzOptions {
    std::size_t min_bin_count = 50;
    std::size_t bootstrap_reps = 100;
    Seed bootstrap_seed{0x1b00c5};
    unsigned threads = 0;
};

/// Binned regression slope bound for f(x) = E[g(X_t) | X_s = x] after the
/// e^{-K t} rescaling. Reports the steepest adjacent-bin slope with a
/// bootstrap CI; the pass threshold carries an explicit bin_width bias term.
DiagnosticReport conditional_lipschitz_estimate(const PathEnsemble& ens, double s, double t,
                                                const std::function<double(double)>& g,
                                                double bin_width, double K,
                                                const LipschitzOptions& opts = {});

/// Histogram occupancy of X_t between the 0.05% and 99.95% sample quantiles;
/// value = largest interior run of empty bins. pass <=> gap <= 1 bin.
DiagnosticReport support_connectedness(const PathEnsemble& ens, double t, double resolution);

struct MarkovProbeOptions {
    double stratum_tol = 0.0;   // |Y_{t2}| <= tol defines the zero stratum
    std::size_t min_group = 50;
};

/// Hidden-state probe on (Y, Z) samples: within the Y_{t2} = 0 stratum, the
/// mean future increment |Y_{t3} - Y_{t2}| is compared between samples whose
/// largest past jump (on [0, t2]) is above vs below the median. A gap beyond
/// 4 standard errors flags dependence on more than the current level.
DiagnosticReport markov_probe(std::span<const Example2DSample> samples,
                              double t1, double t2, double t3,
                              const MarkovProbeOptions& opts = {});

} // namespace acdlab
