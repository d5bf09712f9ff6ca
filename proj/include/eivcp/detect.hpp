#pragma once

// Self-normalized changepoint statistics built from the prefix/suffix
// eigenvalue sequences, decisions against simulated asymptotic quantiles,
// and the argmax changepoint estimator. Both statistics are invariant
// under prefix[k] -> a*prefix[k] + b*k, suffix[k] -> a*suffix[k] + b*(n-k)
// for a > 0, which is what removes the unknown scale constants.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "eivcp/errors.hpp"
#include "eivcp/spectral.hpp"

namespace eivcp {

enum class StatKind { Sup, Integral };

struct SelfNormStats {
    double sup = 0.0;
    double integral = 0.0;
    /// Set when some k had a positive numerator over a zero denominator
    /// (the statistic is +inf then). Absolutely continuous data hits this
    /// with probability zero; it matters only for degenerate inputs.
    bool degenerate_ratio = false;
};

/// Fused evaluation of both statistics over raw sequences. `prefix` and
/// `suffix` must have length n+1; entries are read at the index ranges the
/// definitions use, nothing else is assumed about them (the limit
/// simulation feeds Wiener paths through the same code path).
inline SelfNormStats self_normalized_stats(const std::vector<double>& prefix,
                                           const std::vector<double>& suffix,
                                           std::size_t n) {
    if (n < 4) throw InsufficientData("self_normalized_stats: need n >= 4");
    if (prefix.size() != n + 1 || suffix.size() != n + 1)
        throw InvalidArgument("self_normalized_stats: sequences must have length n+1");

    const double nd = static_cast<double>(n);
    const double lam_n = prefix[n];

    double sup = 0.0;
    double integral = 0.0;
    bool degenerate = false;

    for (std::size_t k = 1; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double num = std::abs(prefix[k] - (kd / nd) * lam_n);

        // Prefix side: deviations of lambda_i from the chord through
        // (k, lambda_k); suffix side mirrors it from the other end.
        const double slope_pre = prefix[k] / kd;
        double max_pre = 0.0, sum_pre = 0.0;
        for (std::size_t i = 1; i < k; ++i) {
            const double dev = prefix[i] - static_cast<double>(i) * slope_pre;
            max_pre = std::max(max_pre, std::abs(dev));
            sum_pre += dev * dev;
        }
        const double slope_suf = suffix[k] / (nd - kd);
        double max_suf = 0.0, sum_suf = 0.0;
        for (std::size_t i = k + 1; i <= n; ++i) {
            const double dev = suffix[i] - (nd - static_cast<double>(i)) * slope_suf;
            max_suf = std::max(max_suf, std::abs(dev));
            sum_suf += dev * dev;
        }

        const double den_sup = max_pre + max_suf;
        if (den_sup > 0.0) {
            sup = std::max(sup, num / den_sup);
        } else if (num > 0.0) {
            sup = std::numeric_limits<double>::infinity();
            degenerate = true;
        } // 0/0: k contributes nothing

        const double den_int = sum_pre + sum_suf;
        if (den_int > 0.0) {
            integral += (num * num) / den_int;
        } else if (num > 0.0) {
            integral = std::numeric_limits<double>::infinity();
            degenerate = true;
        }
    }
    return SelfNormStats{sup, integral, degenerate};
}

inline double stat_sup(const LambdaSequences& seqs) {
    return self_normalized_stats(seqs.prefix, seqs.suffix, seqs.n).sup;
}

inline double stat_int(const LambdaSequences& seqs) {
    return self_normalized_stats(seqs.prefix, seqs.suffix, seqs.n).integral;
}

/// Argmax changepoint estimator; ties break to the smallest k so results
/// are reproducible.
inline std::size_t estimate_changepoint(const LambdaSequences& seqs) {
    const std::size_t n = seqs.n;
    if (n < 4) throw InsufficientData("estimate_changepoint: need n >= 4");
    const auto& prefix = seqs.prefix;
    const auto& suffix = seqs.suffix;
    const double nd = static_cast<double>(n);
    const double lam_n = prefix[n];
    const double suf_0 = suffix[0];

    std::size_t best_k = 1;
    double best = -1.0;
    for (std::size_t k = 1; k < n; ++k) {
        const double kd = static_cast<double>(k);
        const double num = std::abs(prefix[k] - (kd / nd) * lam_n) +
                           std::abs(suffix[k] - ((nd - kd) / nd) * suf_0);

        const double slope_pre = prefix[k] / kd;
        double max_pre = 0.0;
        for (std::size_t i = 1; i < k; ++i)
            max_pre = std::max(max_pre, std::abs(prefix[i] - static_cast<double>(i) * slope_pre));
        const double slope_suf = suffix[k] / (nd - kd);
        double max_suf = 0.0;
        for (std::size_t i = k + 1; i <= n; ++i)
            max_suf = std::max(max_suf,
                               std::abs(suffix[i] - (nd - static_cast<double>(i)) * slope_suf));

        const double den = max_pre + max_suf;
        double ratio;
        if (den > 0.0) {
            ratio = num / den;
        } else if (num > 0.0) {
            ratio = std::numeric_limits<double>::infinity();
        } else {
            continue; // 0/0: skipped
        }
        if (ratio > best) {
            best = ratio;
            best_k = k;
        }
    }
    return best_k;
}

/// Simulated asymptotic quantiles of the two limit distributions, plus the
/// optional full draw pools behind them for continuous p-values.
struct QuantileTable {
    std::size_t grid_points = 0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
    std::vector<double> levels;        // CDF probabilities, strictly increasing
    std::vector<double> quantiles_sup; // aligned with levels
    std::vector<double> quantiles_int;
    std::vector<double> sorted_draws_sup; // optional, ascending
    std::vector<double> sorted_draws_int;

    bool low_precision() const { return replications < 10000; }
    bool has_draws() const { return !sorted_draws_sup.empty() && !sorted_draws_int.empty(); }

    const std::vector<double>& quantiles(StatKind kind) const {
        return kind == StatKind::Sup ? quantiles_sup : quantiles_int;
    }
    const std::vector<double>& draws(StatKind kind) const {
        return kind == StatKind::Sup ? sorted_draws_sup : sorted_draws_int;
    }

    /// (1-alpha)-quantile: exact table level if present, otherwise an order
    /// statistic of the retained draws.
    double critical_value(StatKind kind, double alpha) const {
        if (!(alpha > 0.0 && alpha < 1.0))
            throw InvalidArgument("critical_value: alpha must be in (0,1)");
        const double level = 1.0 - alpha;
        const auto& qs = quantiles(kind);
        for (std::size_t i = 0; i < levels.size(); ++i)
            if (std::abs(levels[i] - level) <= 1e-9) return qs[i];
        if (has_draws()) return draw_quantile(kind, level);
        throw InvalidArgument("critical_value: level not tabulated and no draws retained");
    }

    /// Order-statistic quantile with linear interpolation.
    double draw_quantile(StatKind kind, double level) const {
        const auto& d = draws(kind);
        if (d.empty()) throw TableIncomplete("draw_quantile: no draws retained");
        if (!(level > 0.0 && level < 1.0))
            throw InvalidArgument("draw_quantile: level must be in (0,1)");
        const double h = level * static_cast<double>(d.size() - 1);
        const auto lo = static_cast<std::size_t>(h);
        if (lo + 1 >= d.size()) return d.back();
        const double frac = h - static_cast<double>(lo);
        return d[lo] + frac * (d[lo + 1] - d[lo]);
    }

    /// The published critical values (five levels for each statistic).
    static QuantileTable embedded_table1() {
        QuantileTable t;
        t.grid_points = 1000;
        t.replications = 100000;
        t.seed = 0;
        t.levels = {0.90, 0.95, 0.975, 0.99, 0.995};
        t.quantiles_sup = {1.209008, 1.393566, 1.571462, 1.782524, 1.966223};
        t.quantiles_int = {5.700222, 7.165705, 8.807070, 10.597625, 11.755233};
        return t;
    }
};

/// Empirical upper-tail p-value against the retained draw pool: fraction of
/// draws strictly greater, with the midpoint convention at ties.
inline double p_value(double stat, const QuantileTable& table, StatKind kind) {
    const auto& d = table.draws(kind);
    if (d.empty()) throw TableIncomplete("p_value: table has no draws for this statistic");
    const auto lower = std::lower_bound(d.begin(), d.end(), stat);
    const auto upper = std::upper_bound(d.begin(), d.end(), stat);
    const auto greater = static_cast<double>(d.end() - upper);
    const auto equal = static_cast<double>(upper - lower);
    return (greater + 0.5 * equal) / static_cast<double>(d.size());
}

namespace detail {

/// Fallback p-value when the table carries only tabulated quantiles:
/// piecewise-linear in the statistic between the known (quantile, 1-level)
/// anchors, with a proportional-decay tail beyond the last one. Monotone
/// decreasing in the statistic and exact at the anchors.
inline double p_value_from_quantiles(double stat, const QuantileTable& table, StatKind kind) {
    const auto& qs = table.quantiles(kind);
    if (qs.empty()) throw TableIncomplete("p_value_from_quantiles: empty table");
    if (stat <= 0.0) return 1.0;
    if (stat <= qs.front()) {
        const double p_front = 1.0 - table.levels.front();
        return 1.0 + (p_front - 1.0) * (stat / qs.front());
    }
    for (std::size_t i = 1; i < qs.size(); ++i) {
        if (stat <= qs[i]) {
            const double p_lo = 1.0 - table.levels[i - 1];
            const double p_hi = 1.0 - table.levels[i];
            const double frac = (stat - qs[i - 1]) / (qs[i] - qs[i - 1]);
            return p_lo + frac * (p_hi - p_lo);
        }
    }
    const double p_last = 1.0 - table.levels.back();
    return p_last * (qs.back() / stat);
}

} // namespace detail

struct TestResult {
    double stat_sup = 0.0;
    double stat_int = 0.0;
    double p_sup = 1.0;
    double p_int = 1.0;
    bool reject_sup = false;
    bool reject_int = false;
    std::size_t tau_hat = 1;
    double alpha = 0.05;
    bool degenerate_ratio = false;
    bool p_from_draws = false; // false: interpolated from tabulated quantiles
};

/// Runs both tests at level alpha and always estimates the changepoint.
/// Rejection compares the statistic against the (1-alpha)-quantile;
/// p-values come from the draw pool when the table retains one.
inline TestResult decide(const LambdaSequences& seqs, const QuantileTable& table,
                         double alpha) {
    if (!(alpha > 0.0 && alpha < 1.0)) throw InvalidArgument("decide: alpha must be in (0,1)");
    const auto stats = self_normalized_stats(seqs.prefix, seqs.suffix, seqs.n);

    TestResult res;
    res.stat_sup = stats.sup;
    res.stat_int = stats.integral;
    res.degenerate_ratio = stats.degenerate_ratio;
    res.alpha = alpha;
    res.reject_sup = stats.sup > table.critical_value(StatKind::Sup, alpha);
    res.reject_int = stats.integral > table.critical_value(StatKind::Integral, alpha);
    if (table.has_draws()) {
        res.p_sup = p_value(stats.sup, table, StatKind::Sup);
        res.p_int = p_value(stats.integral, table, StatKind::Integral);
        res.p_from_draws = true;
    } else {
        res.p_sup = detail::p_value_from_quantiles(stats.sup, table, StatKind::Sup);
        res.p_int = detail::p_value_from_quantiles(stats.integral, table, StatKind::Integral);
    }
    res.tau_hat = estimate_changepoint(seqs);
    return res;
}

} // namespace eivcp
