#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eivcp/datagen.hpp"
#include "eivcp/model.hpp"
#include "eivcp/rng.hpp"
#include "eivcp/spectral.hpp"

using namespace eivcp;

namespace {

Dataset h0_dataset(std::uint64_t seed, std::size_t n, double sigma = 0.5,
                   std::size_t p = 1) {
    ScenarioSpec spec;
    spec.design = p == 1 ? DesignSpec::equidistant(n, 1.0) : DesignSpec::power_curve(n, 1.0);
    spec.beta.assign(p, 1.0);
    spec.delta.assign(p, 0.0);
    spec.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, sigma};
    spec.seed = seed;
    return gen_dataset(spec).first;
}

/// Direct per-index oracle: rebuild the prefix Gram from scratch.
double direct_prefix_lambda(const Dataset& ds, std::size_t i) {
    const Matrix t = transform(ds);
    GramAccumulator acc(t.cols());
    for (std::size_t r = 0; r < i; ++r) acc.absorb(t.row(r));
    const double v =
        ds.q() == 1 ? smallest_eigenvalue(acc.gram()) : sum_q_smallest(acc.gram(), ds.q());
    return std::max(v, 0.0);
}

double direct_suffix_lambda(const Dataset& ds, std::size_t i) {
    const Matrix t = transform(ds);
    GramAccumulator acc(t.cols());
    for (std::size_t r = i; r < ds.n(); ++r) acc.absorb(t.row(r));
    const double v =
        ds.q() == 1 ? smallest_eigenvalue(acc.gram()) : sum_q_smallest(acc.gram(), ds.q());
    return std::max(v, 0.0);
}

} // namespace

TEST_CASE("lambda sequence boundary conventions", "[spectral]") {
    const Dataset ds = h0_dataset(1, 30);
    const LambdaSequences seqs = lambda_sequences(ds);
    REQUIRE(seqs.prefix.size() == 31);
    REQUIRE(seqs.suffix.size() == 31);
    CHECK(seqs.prefix[0] == 0.0);
    CHECK(seqs.prefix[1] == 0.0);
    CHECK(seqs.suffix[30] == 0.0);
    CHECK(seqs.suffix[29] == 0.0);
    // identical Gram, bit-equal by construction
    CHECK(seqs.prefix[30] == seqs.suffix[0]);
}

TEST_CASE("rank-deficient prefixes vanish", "[spectral]") {
    const Dataset ds = h0_dataset(2, 20, 0.5, 2); // p = 2, q = 1 -> dim 3
    const LambdaSequences seqs = lambda_sequences(ds);
    for (std::size_t i = 0; i <= 2; ++i) CHECK(std::abs(seqs.prefix[i]) <= 1e-10);
}

TEST_CASE("noiseless collinear data gives all-zero sequences", "[spectral]") {
    Matrix x(10, 1);
    std::vector<double> y(10);
    for (std::size_t i = 0; i < 10; ++i) {
        x(i, 0) = 1.0 + static_cast<double>(i);
        y[i] = 2.0 * x(i, 0);
    }
    const Dataset ds(std::move(x), y, SymMatrix::identity(2));
    const LambdaSequences seqs = lambda_sequences(ds);
    for (double v : seqs.prefix) CHECK(std::abs(v) <= 1e-9);
    for (double v : seqs.suffix) CHECK(std::abs(v) <= 1e-9);
}

TEST_CASE("sweep matches per-index direct oracle", "[spectral][oracle]") {
    for (std::uint64_t seed : {11u, 12u}) {
        for (std::size_t p : {std::size_t{1}, std::size_t{2}}) {
            const Dataset ds = h0_dataset(seed, 40, 0.3, p);
            const LambdaSequences seqs = lambda_sequences(ds);
            for (std::size_t i = 2; i <= ds.n(); ++i) {
                const double direct = direct_prefix_lambda(ds, i);
                CHECK(seqs.prefix[i] ==
                      Catch::Approx(direct).margin(1e-9 * (1.0 + std::abs(direct))));
            }
            for (std::size_t i = 0; i + 2 <= ds.n(); ++i) {
                const double direct = direct_suffix_lambda(ds, i);
                CHECK(seqs.suffix[i] ==
                      Catch::Approx(direct).margin(1e-9 * (1.0 + std::abs(direct))));
            }
        }
    }
}

TEST_CASE("prefix sequence is nondecreasing", "[spectral][property]") {
    const Dataset ds = h0_dataset(21, 80);
    const LambdaSequences seqs = lambda_sequences(ds);
    for (std::size_t i = 1; i <= ds.n(); ++i)
        CHECK(seqs.prefix[i] >= seqs.prefix[i - 1] - 1e-9);
}

TEST_CASE("row reversal swaps prefix and suffix", "[spectral][property]") {
    const Dataset ds = h0_dataset(31, 25);
    Matrix xr(ds.n(), 1);
    std::vector<double> yr(ds.n());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        xr(i, 0) = ds.x()(ds.n() - 1 - i, 0);
        yr[i] = ds.y()(ds.n() - 1 - i, 0);
    }
    const Dataset rev(std::move(xr), yr, ds.sigma());
    const LambdaSequences fwd = lambda_sequences(ds);
    const LambdaSequences bwd = lambda_sequences(rev);
    // prefix over first i rows of the reversed data == suffix over last i
    // rows of the original
    for (std::size_t i = 0; i <= ds.n(); ++i) {
        CHECK(bwd.prefix[i] ==
              Catch::Approx(fwd.suffix[ds.n() - i]).margin(1e-9 * (1.0 + fwd.suffix[ds.n() - i])));
    }
}

TEST_CASE("multivariate response uses the q-smallest sum", "[spectral]") {
    Rng rng(44);
    const std::size_t n = 30;
    Matrix x(n, 1), y(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 0.1 + static_cast<double>(i) / n;
        x(i, 0) = z + 0.1 * rng.normal();
        y(i, 0) = 2.0 * z + 0.1 * rng.normal();
        y(i, 1) = -z + 0.1 * rng.normal();
    }
    const Dataset ds(std::move(x), std::move(y), SymMatrix::identity(3));
    const LambdaSequences seqs = lambda_sequences(ds);
    CHECK(seqs.q == 2);

    const Matrix t = transform(ds);
    GramAccumulator acc(3);
    for (std::size_t i = 0; i < 10; ++i) acc.absorb(t.row(i));
    CHECK(seqs.prefix[10] == Catch::Approx(sum_q_smallest(acc.gram(), 2)).margin(1e-10));
}

TEST_CASE("swip diagnostic sees Brownian scaling under the null", "[spectral][mc]") {
    const std::size_t reps = 300, n = 400;
    const double sigma = 0.5;
    std::vector<LambdaSequences> replicates(reps);
    for (std::size_t r = 0; r < reps; ++r)
        replicates[r] = lambda_sequences(h0_dataset(1000 + r, n, sigma));
    const SwipReport rep = swip_diagnostic(replicates, sigma * sigma);

    CHECK(rep.replicates == reps);
    // variance grows linearly in t
    CHECK(rep.variance_ratios[1] == Catch::Approx(0.5).margin(0.13));
    CHECK(rep.variance_ratios[0] == Catch::Approx(0.25).margin(0.13));
    // disjoint increments are uncorrelated up to Monte Carlo noise
    CHECK(rep.max_abs_increment_corr <= 3.0 / std::sqrt(static_cast<double>(reps)) + 0.1);
    // symmetric marginal at t = 1
    CHECK(std::abs(rep.skewness_t1) <= 0.35);
}

TEST_CASE("swip diagnostic needs enough replicates", "[spectral]") {
    std::vector<LambdaSequences> few(10, lambda_sequences(h0_dataset(5, 20)));
    CHECK_THROWS_AS(swip_diagnostic(few, 0.25), InsufficientReplicates);
}
