#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eivcp/datagen.hpp"
#include "eivcp/model.hpp"
#include "eivcp/spectral.hpp"

using namespace eivcp;

namespace {

double sample_mean(const std::vector<double>& v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sample_var(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double s = 0.0;
    for (double x : v) s += (x - m) * (x - m);
    return s / static_cast<double>(v.size() - 1);
}

double lag1_autocorr(const std::vector<double>& v) {
    const double m = sample_mean(v);
    double num = 0.0, den = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        den += (v[i] - m) * (v[i] - m);
        if (i > 0) num += (v[i] - m) * (v[i - 1] - m);
    }
    return num / den;
}

} // namespace

TEST_CASE("equidistant design formula", "[datagen]") {
    DesignSpec spec = DesignSpec::equidistant(3, 100.0);
    const Matrix z = gen_design(spec);
    CHECK(z(0, 0) == Catch::Approx(25.0));
    CHECK(z(1, 0) == Catch::Approx(50.0));
    CHECK(z(2, 0) == Catch::Approx(75.0));
}

TEST_CASE("power-curve design formula", "[datagen]") {
    DesignSpec spec = DesignSpec::power_curve(9, 100.0);
    const Matrix z = gen_design(spec);
    for (std::size_t i = 1; i <= 9; ++i) {
        const double u = static_cast<double>(i) / 10.0;
        CHECK(z(i - 1, 0) == Catch::Approx(100.0 * u));
        CHECK(z(i - 1, 1) == Catch::Approx(100.0 * std::pow(u, 1.5)));
    }
    // the boundary i = n+1 row would be scale * (1, 1)
    const double u_end = 1.0;
    CHECK(100.0 * u_end == Catch::Approx(100.0 * std::pow(u_end, 1.5)));
}

TEST_CASE("design second moment approaches one third", "[datagen]") {
    // (1/n) Z'Z for the unit-scale equidistant design
    DesignSpec spec = DesignSpec::equidistant(20000, 1.0);
    const Matrix z = gen_design(spec);
    double s = 0.0;
    for (std::size_t i = 0; i < z.rows(); ++i) s += z(i, 0) * z(i, 0);
    CHECK(s / static_cast<double>(z.rows()) == Catch::Approx(1.0 / 3.0).margin(1e-3));
}

TEST_CASE("design validation", "[datagen]") {
    DesignSpec bad = DesignSpec::equidistant(10);
    bad.p = 2;
    CHECK_THROWS_AS(gen_design(bad), InvalidArgument);

    // generation needs at least 4 rows even though the design formula
    // itself is defined for any n
    ScenarioSpec tiny;
    tiny.design = DesignSpec::equidistant(3);
    tiny.beta = {1.0};
    tiny.delta = {0.0};
    tiny.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 1.0};
    CHECK_THROWS_AS(gen_dataset(tiny), InvalidArgument);
}

TEST_CASE("error processes hit the target variance", "[datagen][mc]") {
    const std::size_t n = 400000;
    const double sigma = 0.5;
    for (ErrorProcess pr : {ErrorProcess::IID, ErrorProcess::AR1, ErrorProcess::ARCH1}) {
        for (Innovation in : {Innovation::Normal, Innovation::StudentT3}) {
            Rng rng(substream_seed(404, static_cast<std::uint64_t>(pr),
                                   static_cast<std::uint64_t>(in)));
            const auto series = gen_errors(ErrorProcessSpec{pr, in, sigma}, n, rng);
            const double sd = std::sqrt(sample_var(series));
            // ARCH with t3 innovations has slowly-converging fourth moments;
            // keep a wider band there
            const double tol = (pr == ErrorProcess::ARCH1 && in == Innovation::StudentT3)
                                   ? 0.08
                                   : 0.02;
            CHECK(sd == Catch::Approx(sigma).epsilon(tol));
            CHECK(sample_mean(series) == Catch::Approx(0.0).margin(0.01));
        }
    }
}

TEST_CASE("AR(1) series has lag-1 autocorrelation one half", "[datagen][mc]") {
    Rng rng(505);
    const auto series =
        gen_errors(ErrorProcessSpec{ErrorProcess::AR1, Innovation::Normal, 1.0}, 400000, rng);
    CHECK(lag1_autocorr(series) == Catch::Approx(0.5).margin(0.02));
}

TEST_CASE("IID series is serially uncorrelated", "[datagen][mc]") {
    Rng rng(506);
    const auto series =
        gen_errors(ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 1.0}, 200000, rng);
    CHECK(lag1_autocorr(series) == Catch::Approx(0.0).margin(0.01));
}

TEST_CASE("t3 innovations use the analytic sqrt(3) standardization", "[datagen]") {
    // two identically seeded generators: the scaled t3 innovation equals
    // the raw t3 draw divided by sqrt(3) exactly
    Rng raw(99), scaled(99);
    const auto series =
        gen_errors(ErrorProcessSpec{ErrorProcess::IID, Innovation::StudentT3, 1.0}, 50, scaled);
    for (std::size_t i = 0; i < 50; ++i)
        CHECK(series[i] == raw.student_t3() / std::sqrt(3.0));
}

TEST_CASE("gen_dataset assembles the two-regime response", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::equidistant(50);
    spec.beta = {1.0};
    spec.delta = {0.5};
    spec.tau = 20;
    spec.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 0.3};
    spec.seed = 7;
    auto [ds, truth] = gen_dataset(spec);

    CHECK(ds.n() == 50);
    CHECK(truth.tau == 20);
    for (std::size_t i = 0; i < 50; ++i) {
        // X = Z + Theta bookkeeping
        CHECK(ds.x()(i, 0) == truth.z(i, 0) + truth.theta(i, 0));
        // first tau rows follow beta exactly, the rest beta + delta
        const double slope = (i < spec.tau) ? 1.0 : 1.5;
        CHECK(ds.y()(i, 0) == slope * truth.z(i, 0) + truth.eps[i]);
    }
}

TEST_CASE("pre-change rows satisfy Y - Z beta = eps bit-exactly", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::power_curve(40);
    spec.beta = {1.0, 1.0};
    spec.delta = {0.5, 0.5};
    spec.tau = 25;
    spec.errors = ErrorProcessSpec{ErrorProcess::AR1, Innovation::Normal, 0.5};
    spec.seed = 8;
    auto [ds, truth] = gen_dataset(spec);
    for (std::size_t i = 0; i < spec.tau; ++i) {
        double mean = 0.0;
        for (std::size_t j = 0; j < 2; ++j) mean += truth.z(i, j) * spec.beta[j];
        CHECK(ds.y()(i, 0) == mean + truth.eps[i]);
    }
}

TEST_CASE("seeded generation is bit-reproducible", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::equidistant(30);
    spec.beta = {1.0};
    spec.delta = {0.0};
    spec.errors = ErrorProcessSpec{ErrorProcess::ARCH1, Innovation::StudentT3, 1.0};
    spec.seed = 1234;
    auto [a, ta] = gen_dataset(spec);
    auto [b, tb] = gen_dataset(spec);
    CHECK(a.x().data() == b.x().data());
    CHECK(a.y().data() == b.y().data());
    CHECK(ta.eps == tb.eps);
}

TEST_CASE("error coordinates come from disjoint substreams", "[datagen][mc]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::power_curve(100000);
    spec.beta = {1.0, 1.0};
    spec.delta = {0.0, 0.0};
    spec.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 1.0};
    spec.seed = 22;
    auto [ds, truth] = gen_dataset(spec);
    // cross-correlations of theta columns and eps are MC-level zero
    auto corr = [&](auto get_a, auto get_b) {
        double saa = 0.0, sbb = 0.0, sab = 0.0;
        for (std::size_t i = 0; i < ds.n(); ++i) {
            const double a = get_a(i), b = get_b(i);
            saa += a * a;
            sbb += b * b;
            sab += a * b;
        }
        return sab / std::sqrt(saa * sbb);
    };
    const double c01 = corr([&](std::size_t i) { return truth.theta(i, 0); },
                            [&](std::size_t i) { return truth.theta(i, 1); });
    const double c0e = corr([&](std::size_t i) { return truth.theta(i, 0); },
                            [&](std::size_t i) { return truth.eps[i]; });
    CHECK(std::abs(c01) <= 0.01);
    CHECK(std::abs(c0e) <= 0.01);
}

TEST_CASE("zero-noise limit gives a vanishing lambda_n", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::equidistant(60);
    spec.beta = {1.0};
    spec.delta = {0.0};
    spec.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 1e-9};
    spec.seed = 5;
    auto [ds, truth] = gen_dataset(spec);
    const LambdaSequences seqs = lambda_sequences(ds);
    CHECK(seqs.prefix[ds.n()] <= 1e-12);
}

TEST_CASE("scenario validation", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::equidistant(20);
    spec.beta = {1.0};
    spec.delta = {0.5};
    spec.tau = 0; // invalid under a change
    spec.errors = ErrorProcessSpec{ErrorProcess::IID, Innovation::Normal, 1.0};
    CHECK_THROWS_AS(gen_dataset(spec), InvalidArgument);
    spec.tau = 20; // == n, also invalid
    CHECK_THROWS_AS(gen_dataset(spec), InvalidArgument);
    spec.delta = {0.5, 0.5}; // wrong length
    spec.tau = 10;
    CHECK_THROWS_AS(gen_dataset(spec), InvalidArgument);
}

TEST_CASE("scenario serialization round-trips", "[datagen]") {
    ScenarioSpec spec;
    spec.design = DesignSpec::power_curve(123, 50.0);
    spec.beta = {1.0, -0.5};
    spec.delta = {0.25, 0.0};
    spec.tau = 61;
    spec.errors = ErrorProcessSpec{ErrorProcess::ARCH1, Innovation::StudentT3, 0.75};
    spec.seed = 987654321;

    const std::string text = serialize_scenario(spec);
    const ScenarioSpec back = parse_scenario(text);
    CHECK(back.design.kind == spec.design.kind);
    CHECK(back.design.n == spec.design.n);
    CHECK(back.design.p == spec.design.p);
    CHECK(back.design.scale == spec.design.scale);
    CHECK(back.beta == spec.beta);
    CHECK(back.delta == spec.delta);
    CHECK(back.tau == spec.tau);
    CHECK(back.errors.process == spec.errors.process);
    CHECK(back.errors.innovation == spec.errors.innovation);
    CHECK(back.errors.sigma == spec.errors.sigma);
    CHECK(back.seed == spec.seed);

    // identical datasets from the round-tripped spec
    auto [a, ta] = gen_dataset(spec);
    auto [b, tb] = gen_dataset(back);
    CHECK(a.y().data() == b.y().data());

    CHECK_THROWS_AS(parse_scenario("design.kind = nope\n"), ParseError);
    CHECK_THROWS_AS(parse_scenario("garbage line\n"), ParseError);
}
