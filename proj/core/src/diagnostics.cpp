#include "acdlab/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <stdexcept>

#include "acdlab/errors.hpp"
#include "acdlab/parallel.hpp"
#include "acdlab/rng.hpp"

namespace acdlab {

namespace {

constexpr double kZ99 = 2.5758293035489004;  // two-sided 99% normal quantile

double binomial_halfwidth(double p_hat, std::size_t n) {
    if (n == 0) return 0.0;
    return kZ99 * std::sqrt(std::max(p_hat * (1.0 - p_hat), 0.0) / static_cast<double>(n));
}

struct MeanVar {
    double mean = 0.0;
    double var = 0.0;  // population variance
};

MeanVar mean_var(std::span<const double> xs) {
    MeanVar mv;
    if (xs.empty()) return mv;
    for (double x : xs) mv.mean += x;
    mv.mean /= static_cast<double>(xs.size());
    for (double x : xs) mv.var += (x - mv.mean) * (x - mv.mean);
    mv.var /= static_cast<double>(xs.size());
    return mv;
}

// One direction of the order-exchange scan: first node with lo strictly
// below hi, last node with lo strictly above hi, interior gap minimum.
void scan_direction(const std::vector<double>& lo, const std::vector<double>& hi,
                    double delta, CrossingDirection direction, CouplingEventLog& log) {
    const std::size_t n = lo.size();
    std::size_t first_below = n, last_above = 0;
    bool has_above = false;
    for (std::size_t k = 0; k < n; ++k) {
        if (first_below == n && lo[k] < hi[k]) first_below = k;
        if (lo[k] > hi[k]) {
            last_above = k;
            has_above = true;
        }
    }
    if (first_below == n || !has_above || first_below >= last_above) return;

    double interior_min = std::numeric_limits<double>::infinity();
    for (std::size_t k = first_below + 1; k < last_above; ++k) {
        interior_min = std::min(interior_min, std::fabs(lo[k] - hi[k]));
    }
    const CrossingKind kind = interior_min > delta ? CrossingKind::crossed_without_touch
                                                   : CrossingKind::crossed_with_touch;
    log.events.push_back(CouplingEvent{first_below, last_above, kind, direction});
}

} // namespace

CouplingEventLog almost_continuity_scan(const Path& y, const Path& z, double delta) {
    if (!(y.grid == z.grid)) {
        throw std::invalid_argument("almost_continuity_scan: paths live on different grids");
    }
    if (!(delta > 0.0)) {
        throw std::invalid_argument("almost_continuity_scan: delta must be > 0");
    }

    CouplingEventLog log;
    log.delta = delta;
    log.pair_count = 1;
    scan_direction(y.values, z.values, delta, CrossingDirection::y_over_z, log);
    scan_direction(z.values, y.values, delta, CrossingDirection::z_over_y, log);
    return log;
}

DiagnosticReport almost_continuity_rate(const PairGenerator& gen, std::size_t n_pairs,
                                        double delta, double pass_threshold,
                                        unsigned threads) {
    if (n_pairs == 0) throw std::invalid_argument("almost_continuity_rate: n_pairs must be >= 1");

    std::vector<unsigned char> hit(n_pairs, 0);
    parallel_for(n_pairs, threads, [&](std::size_t i) {
        auto [y, z] = gen(i);
        const CouplingEventLog log = almost_continuity_scan(y, z, delta);
        for (const auto& ev : log.events) {
            if (ev.direction == CrossingDirection::y_over_z &&
                ev.kind == CrossingKind::crossed_without_touch) {
                hit[i] = 1;
                break;
            }
        }
    });

    const double rate = static_cast<double>(std::accumulate(hit.begin(), hit.end(), std::size_t{0})) /
                        static_cast<double>(n_pairs);
    DiagnosticReport report;
    report.statistic_name = "almost_continuity_violation_rate";
    report.value = rate;
    report.ci_halfwidth = binomial_halfwidth(rate, n_pairs);
    report.threshold = pass_threshold;
    report.pass = rate < pass_threshold;
    report.sample_size = n_pairs;
    return report;
}

InequalityReport crossing_inequality_check(const PathEnsemble& ens, double s, double t,
                                           double a, double b, double c, double d, double e,
                                           const PathWeight& u_weight,
                                           const PathWeight& v_weight) {
    if (!(s < t)) throw std::invalid_argument("crossing_inequality_check: need s < t");
    if (t > ens.grid.t_end()) {
        throw std::invalid_argument("crossing_inequality_check: t beyond ensemble horizon");
    }
    if (!(b < c && c <= d && d < e)) {
        throw std::invalid_argument("crossing_inequality_check: need b < c <= d < e");
    }
    const std::size_t n = ens.size();
    if (n == 0) throw std::invalid_argument("crossing_inequality_check: empty ensemble");

    const std::size_t ks = ens.grid.index_at(s);
    const std::size_t kt = ens.grid.index_at(t);

    // means of the four weighted indicator products
    double m_lo_high = 0.0, m_hi_low = 0.0, m_lo_low = 0.0, m_hi_high = 0.0;
    double q_lo_high = 0.0, q_hi_low = 0.0, q_lo_low = 0.0, q_hi_high = 0.0;  // second moments
    for (std::size_t i = 0; i < n; ++i) {
        const double xs = ens.paths[i][ks];
        const double xt = ens.paths[i][kt];
        double u = 1.0, v = 1.0;
        if (u_weight || v_weight) {
            const Path p = ens.path(i);
            if (u_weight) u = u_weight(p);
            if (v_weight) v = v_weight(p);
            if (u < 0.0 || v < 0.0) {
                throw std::invalid_argument("crossing_inequality_check: weights must be >= 0");
            }
        }
        const bool low_band = (b < xt && xt < c);
        const bool high_band = (d < xt && xt < e);
        if (xs < a) {
            if (high_band) { m_lo_high += u; q_lo_high += u * u; }
            if (low_band) { m_lo_low += u; q_lo_low += u * u; }
        } else if (xs > a) {
            if (low_band) { m_hi_low += v; q_hi_low += v * v; }
            if (high_band) { m_hi_high += v; q_hi_high += v * v; }
        }
    }
    const double dn = static_cast<double>(n);
    m_lo_high /= dn; m_hi_low /= dn; m_lo_low /= dn; m_hi_high /= dn;
    const double var_lo_high = q_lo_high / dn - m_lo_high * m_lo_high;
    const double var_hi_low = q_hi_low / dn - m_hi_low * m_hi_low;
    const double var_lo_low = q_lo_low / dn - m_lo_low * m_lo_low;
    const double var_hi_high = q_hi_high / dn - m_hi_high * m_hi_high;

    InequalityReport rep;
    rep.s = s; rep.t = t; rep.a = a; rep.b = b; rep.c = c; rep.d = d; rep.e = e;
    rep.lhs_estimate = m_lo_high * m_hi_low;
    rep.rhs_estimate = m_lo_low * m_hi_high;
    // first-order variance of a product of independent-sample means
    rep.lhs_ci = kZ99 * std::sqrt(std::max(0.0, m_hi_low * m_hi_low * var_lo_high +
                                                    m_lo_high * m_lo_high * var_hi_low) / dn);
    rep.rhs_ci = kZ99 * std::sqrt(std::max(0.0, m_hi_high * m_hi_high * var_lo_low +
                                                    m_lo_low * m_lo_low * var_hi_high) / dn);
    rep.satisfied_within_ci = rep.lhs_estimate <= rep.rhs_estimate + rep.lhs_ci + rep.rhs_ci;
    return rep;
}

DiagnosticReport simultaneous_jump_rate(const PairGenerator& gen, std::size_t n_pairs,
                                        double jump_threshold, double pass_threshold,
                                        unsigned threads) {
    if (n_pairs == 0) throw std::invalid_argument("simultaneous_jump_rate: n_pairs must be >= 1");
    if (!(jump_threshold > 0.0)) {
        throw std::invalid_argument("simultaneous_jump_rate: jump_threshold must be > 0");
    }

    std::vector<unsigned char> hit(n_pairs, 0);
    parallel_for(n_pairs, threads, [&](std::size_t i) {
        auto [y, z] = gen(i);
        if (!(y.grid == z.grid)) {
            throw std::invalid_argument("simultaneous_jump_rate: pair grids differ");
        }
        for (std::size_t k = 1; k < y.values.size(); ++k) {
            if (std::fabs(y.values[k] - y.values[k - 1]) > jump_threshold &&
                std::fabs(z.values[k] - z.values[k - 1]) > jump_threshold) {
                hit[i] = 1;
                break;
            }
        }
    });

    const double rate = static_cast<double>(std::accumulate(hit.begin(), hit.end(), std::size_t{0})) /
                        static_cast<double>(n_pairs);
    DiagnosticReport report;
    report.statistic_name = "simultaneous_jump_rate";
    report.value = rate;
    report.ci_halfwidth = binomial_halfwidth(rate, n_pairs);
    report.threshold = pass_threshold;
    report.pass = rate < pass_threshold;
    report.sample_size = n_pairs;
    return report;
}

double ks_distance(std::vector<double> sample,
                   const std::function<double(double)>& reference_cdf) {
    if (sample.empty()) throw insufficient_data_error("ks_distance: empty sample");
    std::sort(sample.begin(), sample.end());
    const double n = static_cast<double>(sample.size());

    // |empirical - reference| at the sample points, ties grouped so that
    // atoms shared by both distributions cancel instead of registering a
    // spurious unit gap
    double dist = 0.0;
    std::size_t i = 0;
    while (i < sample.size()) {
        std::size_t j = i;
        while (j + 1 < sample.size() && sample[j + 1] == sample[i]) ++j;
        const double emp = static_cast<double>(j + 1) / n;
        dist = std::max(dist, std::fabs(emp - reference_cdf(sample[i])));
        i = j + 1;
    }
    return dist;
}

namespace {

// unordered pairwise-distance sums, one pass over presorted values
struct EnergyTerms {
    double cross = 0.0, within_a = 0.0, within_b = 0.0;
};

EnergyTerms energy_terms(const std::vector<double>& sorted_vals,
                         const std::vector<std::uint32_t>& sorted_ids,
                         const std::vector<unsigned char>& is_a) {
    EnergyTerms t;
    double cnt_a = 0.0, sum_a = 0.0, cnt_b = 0.0, sum_b = 0.0;
    for (std::size_t k = 0; k < sorted_vals.size(); ++k) {
        const double v = sorted_vals[k];
        if (is_a[sorted_ids[k]]) {
            t.within_a += v * cnt_a - sum_a;
            t.cross += v * cnt_b - sum_b;
            cnt_a += 1.0;
            sum_a += v;
        } else {
            t.within_b += v * cnt_b - sum_b;
            t.cross += v * cnt_a - sum_a;
            cnt_b += 1.0;
            sum_b += v;
        }
    }
    return t;
}

} // namespace

DiagnosticReport fdd_two_sample(const PathEnsemble& ens_a, const PathEnsemble& ens_b,
                                std::span<const double> times, std::size_t n_permutations,
                                Seed seed, double p_floor, unsigned threads) {
    if (times.empty()) throw std::invalid_argument("fdd_two_sample: times must be nonempty");
    if (!std::is_sorted(times.begin(), times.end())) {
        throw std::invalid_argument("fdd_two_sample: times must be sorted");
    }
    if (times.back() > ens_a.grid.t_end() || times.back() > ens_b.grid.t_end()) {
        throw std::invalid_argument("fdd_two_sample: horizon does not cover max(times)");
    }
    const std::size_t n = ens_a.size(), m = ens_b.size();
    if (n == 0 || m == 0) throw std::invalid_argument("fdd_two_sample: empty ensemble");
    const std::size_t total = n + m;
    const std::size_t dim = times.size();

    // pooled d-dimensional marginal vectors, ensemble A first
    std::vector<double> pooled(total * dim);
    for (std::size_t j = 0; j < dim; ++j) {
        const std::size_t ka = ens_a.grid.index_at(times[j]);
        const std::size_t kb = ens_b.grid.index_at(times[j]);
        for (std::size_t i = 0; i < n; ++i) pooled[i * dim + j] = ens_a.paths[i][ka];
        for (std::size_t i = 0; i < m; ++i) pooled[(n + i) * dim + j] = ens_b.paths[i][kb];
    }

    // fixed direction set: part of the statistic, independent of the user seed
    const std::size_t n_dirs = dim == 1 ? 1 : 32;
    std::vector<double> dirs(n_dirs * dim);
    if (dim == 1) {
        dirs[0] = 1.0;
    } else {
        Rng dir_rng(Seed{0xd12ec710u});
        for (std::size_t l = 0; l < n_dirs; ++l) {
            double norm2 = 0.0;
            do {
                norm2 = 0.0;
                for (std::size_t j = 0; j < dim; ++j) {
                    const double g = dir_rng.gaussian();
                    dirs[l * dim + j] = g;
                    norm2 += g * g;
                }
            } while (norm2 == 0.0);
            const double inv = 1.0 / std::sqrt(norm2);
            for (std::size_t j = 0; j < dim; ++j) dirs[l * dim + j] *= inv;
        }
    }

    // per direction: projections sorted once, identities carried along
    std::vector<std::vector<double>> proj_vals(n_dirs);
    std::vector<std::vector<std::uint32_t>> proj_ids(n_dirs);
    for (std::size_t l = 0; l < n_dirs; ++l) {
        std::vector<std::pair<double, std::uint32_t>> tmp(total);
        for (std::size_t i = 0; i < total; ++i) {
            double p = 0.0;
            for (std::size_t j = 0; j < dim; ++j) p += dirs[l * dim + j] * pooled[i * dim + j];
            tmp[i] = {p, static_cast<std::uint32_t>(i)};
        }
        std::sort(tmp.begin(), tmp.end());
        proj_vals[l].resize(total);
        proj_ids[l].resize(total);
        for (std::size_t i = 0; i < total; ++i) {
            proj_vals[l][i] = tmp[i].first;
            proj_ids[l][i] = tmp[i].second;
        }
    }

    const auto statistic = [&](const std::vector<unsigned char>& is_a) {
        double acc = 0.0;
        for (std::size_t l = 0; l < n_dirs; ++l) {
            const EnergyTerms t = energy_terms(proj_vals[l], proj_ids[l], is_a);
            acc += 2.0 * t.cross / (static_cast<double>(n) * static_cast<double>(m)) -
                   2.0 * t.within_a / (static_cast<double>(n) * static_cast<double>(n)) -
                   2.0 * t.within_b / (static_cast<double>(m) * static_cast<double>(m));
        }
        return acc / static_cast<double>(n_dirs);
    };

    std::vector<unsigned char> base_labels(total, 0);
    for (std::size_t i = 0; i < n; ++i) base_labels[i] = 1;
    const double observed = statistic(base_labels);

    std::vector<double> perm_stats(n_permutations);
    parallel_for(n_permutations, threads, [&](std::size_t p) {
        std::vector<unsigned char> labels = base_labels;
        Rng rng(derive_path_seed(seed, p));
        for (std::size_t i = total - 1; i > 0; --i) {
            const std::size_t j = static_cast<std::size_t>(rng.below(i + 1));
            std::swap(labels[i], labels[j]);
        }
        perm_stats[p] = statistic(labels);
    });

    std::size_t at_least = 0;
    for (double sp : perm_stats) {
        if (sp >= observed) ++at_least;
    }
    const double p_value = static_cast<double>(1 + at_least) /
                           static_cast<double>(1 + n_permutations);

    DiagnosticReport report;
    report.statistic_name = "fdd_energy_permutation_p";
    report.value = p_value;
    report.ci_halfwidth = binomial_halfwidth(p_value, n_permutations);
    report.threshold = p_floor;
    report.pass = p_value >= p_floor;
    report.sample_size = total;
    return report;
}

DiagnosticReport conditional_lipschitz_estimate(const PathEnsemble& ens, double s, double t,
                                                const std::function<double(double)>& g,
                                                double bin_width, double K,
                                                const LipschitzOptions& opts) {
    if (!(s < t)) throw std::invalid_argument("conditional_lipschitz_estimate: need s < t");
    if (!(bin_width > 0.0)) {
        throw std::invalid_argument("conditional_lipschitz_estimate: bin_width must be > 0");
    }
    if (t > ens.grid.t_end()) {
        throw std::invalid_argument("conditional_lipschitz_estimate: t beyond horizon");
    }
    const std::size_t n = ens.size();
    if (n == 0) throw std::invalid_argument("conditional_lipschitz_estimate: empty ensemble");

    const std::size_t ks = ens.grid.index_at(s);
    const std::size_t kt = ens.grid.index_at(t);
    const double scale_s = std::exp(-K * s);
    const double scale_t = std::exp(-K * t);

    std::vector<long long> bin_of(n);
    std::vector<double> target(n);
    for (std::size_t i = 0; i < n; ++i) {
        bin_of[i] = static_cast<long long>(std::floor(scale_s * ens.paths[i][ks] / bin_width));
        target[i] = g(scale_t * ens.paths[i][kt]);
    }

    struct BinStat {
        std::size_t count = 0;
        double sum = 0.0;
    };
    const auto steepest_slope = [&](const std::map<long long, BinStat>& bins) {
        double slope = 0.0;
        bool have_prev = false;
        long long prev_bin = 0;
        double prev_mean = 0.0;
        std::size_t qualifying = 0;
        for (const auto& [idx, st] : bins) {
            if (st.count < opts.min_bin_count) continue;
            ++qualifying;
            const double mean = st.sum / static_cast<double>(st.count);
            if (have_prev) {
                const double dx = static_cast<double>(idx - prev_bin) * bin_width;
                slope = std::max(slope, std::fabs(mean - prev_mean) / dx);
            }
            have_prev = true;
            prev_bin = idx;
            prev_mean = mean;
        }
        return std::pair<double, std::size_t>{slope, qualifying};
    };

    std::map<long long, BinStat> bins;
    for (std::size_t i = 0; i < n; ++i) {
        auto& b = bins[bin_of[i]];
        ++b.count;
        b.sum += target[i];
    }
    const auto [l_hat, qualifying] = steepest_slope(bins);
    if (qualifying < 2) {
        throw insufficient_data_error(
            "conditional_lipschitz_estimate: fewer than two bins with enough samples");
    }

    // bootstrap over paths
    std::vector<double> boot(opts.bootstrap_reps,
                             std::numeric_limits<double>::quiet_NaN());
    parallel_for(opts.bootstrap_reps, opts.threads, [&](std::size_t r) {
        Rng rng(derive_path_seed(opts.bootstrap_seed, r));
        std::map<long long, BinStat> rb;
        for (std::size_t i = 0; i < n; ++i) {
            const std::size_t pick = static_cast<std::size_t>(rng.below(n));
            auto& bb = rb[bin_of[pick]];
            ++bb.count;
            bb.sum += target[pick];
        }
        const auto [ls, q] = steepest_slope(rb);
        if (q >= 2) boot[r] = ls;
    });
    double bsum = 0.0, bsq = 0.0;
    std::size_t bcount = 0;
    for (double v : boot) {
        if (std::isnan(v)) continue;
        bsum += v;
        bsq += v * v;
        ++bcount;
    }
    double ci = 0.0;
    if (bcount >= 2) {
        const double bm = bsum / static_cast<double>(bcount);
        const double bv = std::max(0.0, bsq / static_cast<double>(bcount) - bm * bm);
        ci = kZ99 * std::sqrt(bv);
    }

    DiagnosticReport report;
    report.statistic_name = "conditional_lipschitz_slope";
    report.value = l_hat;
    report.ci_halfwidth = ci;
    report.threshold = 1.0 + ci + bin_width;  // explicit binning-bias slack
    report.pass = l_hat <= report.threshold;
    report.sample_size = n;
    return report;
}

DiagnosticReport support_connectedness(const PathEnsemble& ens, double t, double resolution) {
    if (!(resolution > 0.0)) {
        throw std::invalid_argument("support_connectedness: resolution must be > 0");
    }
    if (t > ens.grid.t_end()) {
        throw std::invalid_argument("support_connectedness: t beyond horizon");
    }
    std::vector<double> sample = ens.marginal_at(t);
    if (sample.empty()) throw std::invalid_argument("support_connectedness: empty ensemble");
    std::sort(sample.begin(), sample.end());

    // trim extreme order statistics: a continuous law's sample max leaves
    // straggler gaps that say nothing about the support's connectedness
    const std::size_t cut = static_cast<std::size_t>(0.0005 * static_cast<double>(sample.size()));
    const std::size_t lo = cut, hi = sample.size() - 1 - cut;

    const long long first_bin = static_cast<long long>(std::floor(sample[lo] / resolution));
    const long long last_bin = static_cast<long long>(std::floor(sample[hi] / resolution));
    std::vector<unsigned char> occupied(static_cast<std::size_t>(last_bin - first_bin + 1), 0);
    for (std::size_t i = lo; i <= hi; ++i) {
        const long long b = static_cast<long long>(std::floor(sample[i] / resolution));
        occupied[static_cast<std::size_t>(b - first_bin)] = 1;
    }

    std::size_t largest_gap = 0, run = 0;
    for (unsigned char occ : occupied) {  // first and last bins are occupied
        if (occ) {
            largest_gap = std::max(largest_gap, run);
            run = 0;
        } else {
            ++run;
        }
    }

    DiagnosticReport report;
    report.statistic_name = "support_interior_gap_bins";
    report.value = static_cast<double>(largest_gap);
    report.ci_halfwidth = 0.0;
    report.threshold = 1.0;
    report.pass = largest_gap <= 1;
    report.sample_size = sample.size();
    return report;
}

DiagnosticReport markov_probe(std::span<const Example2DSample> samples,
                              double t1, double t2, double t3,
                              const MarkovProbeOptions& opts) {
    if (!(t1 < t2 && t2 < t3)) {
        throw std::invalid_argument("markov_probe: need t1 < t2 < t3");
    }
    if (samples.empty()) throw insufficient_data_error("markov_probe: no samples");
    const TimeGrid& grid = samples.front().y_path.grid;
    if (t3 > grid.t_end()) throw std::invalid_argument("markov_probe: t3 beyond horizon");
    const std::size_t k2 = grid.index_at(t2);
    const std::size_t k3 = grid.index_at(t3);

    // zero stratum of Y_{t2}: the current level hides the amplitude, past
    // jump sizes reveal it
    std::vector<double> past_jump, future_move;
    for (const auto& sample : samples) {
        const auto& v = sample.y_path.values;
        const double y2 = v[k2];
        if (std::fabs(y2) > opts.stratum_tol) continue;
        double jmax = 0.0;
        for (std::size_t k = 1; k <= k2; ++k) {
            jmax = std::max(jmax, std::fabs(v[k] - v[k - 1]));
        }
        if (jmax <= 0.0) continue;  // no past jump: nothing to rank by
        past_jump.push_back(jmax);
        future_move.push_back(std::fabs(v[k3] - y2));
    }

    DiagnosticReport report;
    report.statistic_name = "markov_probe_mean_gap";
    report.threshold = 0.0;
    report.sample_size = past_jump.size();

    if (past_jump.size() < 2 * opts.min_group) {
        throw insufficient_data_error("markov_probe: zero stratum too small (" +
                                      std::to_string(past_jump.size()) + " samples)");
    }

    std::vector<double> sorted_jumps = past_jump;
    std::nth_element(sorted_jumps.begin(), sorted_jumps.begin() + sorted_jumps.size() / 2,
                     sorted_jumps.end());
    const double median = sorted_jumps[sorted_jumps.size() / 2];

    std::vector<double> hi, lo;
    for (std::size_t i = 0; i < past_jump.size(); ++i) {
        (past_jump[i] > median ? hi : lo).push_back(future_move[i]);
    }
    if (hi.size() < opts.min_group || lo.size() < opts.min_group) {
        // degenerate ranking (e.g. every past jump equal): no hidden state visible
        report.value = 0.0;
        report.ci_halfwidth = 0.0;
        report.pass = false;
        return report;
    }

    const MeanVar mh = mean_var(hi);
    const MeanVar ml = mean_var(lo);
    const double se = std::sqrt(mh.var / static_cast<double>(hi.size()) +
                                ml.var / static_cast<double>(lo.size()));
    report.value = mh.mean - ml.mean;
    report.ci_halfwidth = 4.0 * se;  // detection margin: four standard errors
    report.pass = report.value > report.ci_halfwidth;
    return report;
}

} // namespace acdlab
