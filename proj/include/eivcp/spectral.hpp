#pragma once

// Prefix and suffix sequences of smallest eigenvalues (or q-smallest sums)
// of the whitened partial Gram matrices. One forward and one backward
// accumulation pass with a full eigen solve per index: p+q is small, and
// exact recomputation avoids the error accumulation of rank-one eigenvalue
// update schemes while staying linear in n.

#include <array>
#include <cmath>
#include <cstddef>
#include <vector>

#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"
#include "eivcp/model.hpp"

namespace eivcp {

/// prefix[i]: q-smallest eigenvalue sum over rows 1..i (0 for i < 2);
/// suffix[i]: the same over rows i+1..n (0 for i > n-2).
/// prefix[n] and suffix[0] are the same Gram and compare bit-equal.
struct LambdaSequences {
    std::size_t n = 0;
    std::size_t q = 1;
    std::vector<double> prefix; // length n+1
    std::vector<double> suffix; // length n+1
    std::size_t clamped = 0;    // negative round-off eigenvalues zeroed
};

namespace detail {

inline double lambda_of(const SymMatrix& gram, std::size_t q, std::size_t* clamped) {
    double v = (q == 1) ? smallest_eigenvalue(gram) : sum_q_smallest(gram, q);
    if (v < 0.0) {
        // Theory guarantees nonnegativity; anything below zero is round-off.
        ++*clamped;
        v = 0.0;
    }
    return v;
}

} // namespace detail

inline LambdaSequences lambda_sequences(const Dataset& ds) {
    const std::size_t n = ds.n(), q = ds.q();
    const Matrix t = transform(ds);

    LambdaSequences seqs;
    seqs.n = n;
    seqs.q = q;
    seqs.prefix.assign(n + 1, 0.0);
    seqs.suffix.assign(n + 1, 0.0);

    GramAccumulator fwd(t.cols());
    for (std::size_t i = 1; i <= n; ++i) {
        fwd.absorb(t.row(i - 1));
        if (i >= 2) seqs.prefix[i] = detail::lambda_of(fwd.gram(), q, &seqs.clamped);
    }

    GramAccumulator bwd(t.cols());
    for (std::size_t i = n; i-- > 0;) {
        bwd.absorb(t.row(i));
        if (n - i >= 2 && i >= 1) seqs.suffix[i] = detail::lambda_of(bwd.gram(), q, &seqs.clamped);
    }
    // Same full-data Gram by definition; assign rather than recompute so the
    // identity holds bit-exactly.
    seqs.suffix[0] = seqs.prefix[n];
    return seqs;
}

/// Shape checks of the Brownian limit for the centered, sqrt(n)-scaled
/// lambda process under the null. The proportionality constant involves
/// the long-run residual variance and is deliberately not estimated;
/// self-normalization makes it irrelevant downstream.
struct SwipReport {
    std::size_t replicates = 0;
    std::array<double, 4> grid{0.25, 0.5, 0.75, 1.0};
    std::array<double, 4> variances{};       // var of (lambda_[nt] - [nt] s2)/sqrt(n)
    std::array<double, 4> variance_ratios{}; // variances[j] / variances[3]
    double max_abs_increment_corr = 0.0;     // across disjoint grid increments
    double skewness_t1 = 0.0;
};

inline SwipReport swip_diagnostic(const std::vector<LambdaSequences>& replicates,
                                  double sigma2) {
    if (replicates.size() < 200)
        throw InsufficientReplicates("swip_diagnostic: need at least 200 replicates");
    const std::size_t r = replicates.size();
    const std::size_t n = replicates.front().n;
    for (const auto& s : replicates)
        if (s.n != n) throw InvalidArgument("swip_diagnostic: replicate sizes differ");

    SwipReport rep;
    rep.replicates = r;
    const double sqrt_n = std::sqrt(static_cast<double>(n));

    std::array<std::vector<double>, 4> values;
    for (std::size_t g = 0; g < 4; ++g) {
        values[g].resize(r);
        const auto idx = static_cast<std::size_t>(static_cast<double>(n) * rep.grid[g]);
        for (std::size_t i = 0; i < r; ++i) {
            values[g][i] =
                (replicates[i].prefix[idx] - static_cast<double>(idx) * sigma2) / sqrt_n;
        }
    }

    auto mean_of = [](const std::vector<double>& v) {
        double s = 0.0;
        for (double x : v) s += x;
        return s / static_cast<double>(v.size());
    };
    auto var_of = [&](const std::vector<double>& v) {
        const double m = mean_of(v);
        double s = 0.0;
        for (double x : v) s += (x - m) * (x - m);
        return s / static_cast<double>(v.size() - 1);
    };

    for (std::size_t g = 0; g < 4; ++g) rep.variances[g] = var_of(values[g]);
    for (std::size_t g = 0; g < 4; ++g)
        rep.variance_ratios[g] = rep.variances[g] / rep.variances[3];

    // Increments over the four disjoint grid intervals.
    std::array<std::vector<double>, 4> inc;
    for (std::size_t g = 0; g < 4; ++g) {
        inc[g].resize(r);
        for (std::size_t i = 0; i < r; ++i)
            inc[g][i] = values[g][i] - (g == 0 ? 0.0 : values[g - 1][i]);
    }
    auto corr_of = [&](const std::vector<double>& a, const std::vector<double>& b) {
        const double ma = mean_of(a), mb = mean_of(b);
        double sab = 0.0, saa = 0.0, sbb = 0.0;
        for (std::size_t i = 0; i < a.size(); ++i) {
            sab += (a[i] - ma) * (b[i] - mb);
            saa += (a[i] - ma) * (a[i] - ma);
            sbb += (b[i] - mb) * (b[i] - mb);
        }
        return sab / std::sqrt(saa * sbb);
    };
    for (std::size_t g1 = 0; g1 < 4; ++g1)
        for (std::size_t g2 = g1 + 1; g2 < 4; ++g2)
            rep.max_abs_increment_corr =
                std::max(rep.max_abs_increment_corr, std::abs(corr_of(inc[g1], inc[g2])));

    const double m1 = mean_of(values[3]);
    double m2 = 0.0, m3 = 0.0;
    for (double x : values[3]) {
        const double c = x - m1;
        m2 += c * c;
        m3 += c * c * c;
    }
    m2 /= static_cast<double>(r);
    m3 /= static_cast<double>(r);
    rep.skewness_t1 = m3 / std::pow(m2, 1.5);
    return rep;
}

} // namespace eivcp
