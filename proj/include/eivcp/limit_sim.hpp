#pragma once

// Monte Carlo for the asymptotic null distributions: discretized Wiener
// paths are fed through the same statistic code that handles data, because
// the discrete forms of the limit functionals coincide term-for-term with
// the finite-sample statistics once the grid spacing cancels between
// numerator and denominator.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>
#include <vector>

#include "eivcp/detect.hpp"
#include "eivcp/errors.hpp"
#include "eivcp/parallel.hpp"
#include "eivcp/rng.hpp"

namespace eivcp {

/// Standard Wiener process on [0,1] sampled at t_j = j/m.
struct WienerPath {
    std::size_t m = 0;
    std::vector<double> values; // length m+1, values[0] == 0
};

inline WienerPath simulate_path(std::size_t m, Rng& rng) {
    if (m < 2) throw InvalidArgument("simulate_path: need m >= 2");
    WienerPath path;
    path.m = m;
    path.values.resize(m + 1);
    path.values[0] = 0.0;
    const double step = 1.0 / std::sqrt(static_cast<double>(m));
    for (std::size_t j = 1; j <= m; ++j)
        path.values[j] = path.values[j - 1] + step * rng.normal();
    return path;
}

/// One draw from each limit distribution: prefix_k = W(k/m) and
/// suffix_k = W(1) - W(k/m) play the roles of the lambda sequences.
inline std::pair<double, double> limit_draw(const WienerPath& path) {
    const std::size_t m = path.m;
    std::vector<double> suffix(m + 1);
    const double w1 = path.values[m];
    for (std::size_t k = 0; k <= m; ++k) suffix[k] = w1 - path.values[k];
    const auto stats = self_normalized_stats(path.values, suffix, m);
    return {stats.sup, stats.integral};
}

/// Simulates `reps` independent draws (substream per replicate, so results
/// do not depend on thread count) and extracts order-statistic quantiles.
inline QuantileTable simulate_quantiles(std::size_t m, std::size_t reps,
                                        const std::vector<double>& levels,
                                        std::uint64_t seed, bool keep_draws = true) {
    if (m < 2) throw InvalidArgument("simulate_quantiles: need m >= 2");
    if (reps < 1) throw InvalidArgument("simulate_quantiles: need reps >= 1");
    for (double l : levels)
        if (!(l > 0.0 && l < 1.0))
            throw InvalidArgument("simulate_quantiles: levels must be in (0,1)");

    std::vector<double> sup_draws(reps), int_draws(reps);
    parallel_for(reps, [&](std::size_t r) {
        Rng rng(substream_seed(seed, 0x57494e45ULL, r));
        const WienerPath path = simulate_path(m, rng);
        const auto [s, t] = limit_draw(path);
        sup_draws[r] = s;
        int_draws[r] = t;
    });
    std::sort(sup_draws.begin(), sup_draws.end());
    std::sort(int_draws.begin(), int_draws.end());

    QuantileTable table;
    table.grid_points = m;
    table.replications = reps;
    table.seed = seed;
    table.levels = levels;
    std::sort(table.levels.begin(), table.levels.end());
    table.sorted_draws_sup = std::move(sup_draws);
    table.sorted_draws_int = std::move(int_draws);
    for (double l : table.levels) {
        table.quantiles_sup.push_back(table.draw_quantile(StatKind::Sup, l));
        table.quantiles_int.push_back(table.draw_quantile(StatKind::Integral, l));
    }
    if (!keep_draws) {
        table.sorted_draws_sup.clear();
        table.sorted_draws_int.clear();
    }
    return table;
}

inline const std::vector<double>& default_levels() {
    static const std::vector<double> levels{0.90, 0.95, 0.975, 0.99, 0.995};
    return levels;
}

} // namespace eivcp
