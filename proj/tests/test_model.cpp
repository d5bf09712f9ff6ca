#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "eivcp/model.hpp"
#include "eivcp/rng.hpp"
#include "oracles.hpp"

using namespace eivcp;

namespace {

Matrix column(const std::vector<double>& v) {
    Matrix m(v.size(), 1);
    for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
    return m;
}

Dataset noisy_scalar_dataset(std::uint64_t seed, std::size_t n, double beta, double sd,
                             SymMatrix sigma = SymMatrix::identity(2)) {
    Rng rng(seed);
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double z = 0.2 + static_cast<double>(i) / static_cast<double>(n);
        x(i, 0) = z + sd * rng.normal();
        y[i] = beta * z + sd * rng.normal();
    }
    return Dataset(std::move(x), y, std::move(sigma));
}

SymMatrix random_sigma(std::size_t dim, std::uint64_t seed) {
    Rng rng(seed);
    Matrix a(dim, dim);
    for (std::size_t i = 0; i < dim; ++i)
        for (std::size_t j = 0; j < dim; ++j) a(i, j) = 0.3 * rng.normal();
    SymMatrix m = SymMatrix::from_dense(matmul(transpose(a), a), 1e-9);
    for (std::size_t i = 0; i < dim; ++i) m.set(i, i, m(i, i) + 1.0);
    return m;
}

double fnorm_sq_weighted(const TlsFit& fit, const SymMatrix& sigma) {
    // || [theta_hat, eps_hat] sigma^{-1/2} ||_F^2
    const std::size_t n = fit.fitted_theta.rows();
    const std::size_t p = fit.fitted_theta.cols();
    const std::size_t q = fit.fitted_eps.cols();
    Matrix joint(n, p + q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) joint(i, j) = fit.fitted_theta(i, j);
        for (std::size_t j = 0; j < q; ++j) joint(i, p + j) = fit.fitted_eps(i, j);
    }
    const Matrix w = matmul(joint, inv_sqrt_spd(sigma).to_dense());
    double s = 0.0;
    for (double v : w.data()) s += v * v;
    return s;
}

} // namespace

TEST_CASE("transform with identity covariance is a no-op", "[model]") {
    const Dataset ds(column({1.0, 2.0, 3.0}), std::vector<double>{2.0, 4.0, 6.0}, SymMatrix::identity(2));
    const Matrix t = transform(ds);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t(i, 0) == Catch::Approx(ds.x()(i, 0)));
        CHECK(t(i, 1) == Catch::Approx(ds.y()(i, 0)));
    }
}

TEST_CASE("transform with diagonal covariance scales columns", "[model]") {
    const Dataset ds(column({1.0, 2.0, 3.0}), std::vector<double>{2.0, 4.0, 6.0},
                     SymMatrix::diagonal({4.0, 1.0}));
    const Matrix t = transform(ds);
    for (std::size_t i = 0; i < 3; ++i) {
        CHECK(t(i, 0) == Catch::Approx(0.5 * ds.x()(i, 0)));
        CHECK(t(i, 1) == Catch::Approx(ds.y()(i, 0)));
    }
}

TEST_CASE("transform Gram equals the direct-product oracle", "[model]") {
    const SymMatrix sigma = random_sigma(2, 91);
    const Dataset ds = noisy_scalar_dataset(92, 30, 1.5, 0.1, sigma);
    const Matrix t = transform(ds);
    const Matrix gram = matmul(transpose(t), t);

    Matrix joint(ds.n(), 2);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        joint(i, 0) = ds.x()(i, 0);
        joint(i, 1) = ds.y()(i, 0);
    }
    const Matrix w = inv_sqrt_spd(sigma).to_dense();
    const Matrix expected = matmul(matmul(w, matmul(transpose(joint), joint)), w);
    for (std::size_t i = 0; i < 2; ++i)
        for (std::size_t j = 0; j < 2; ++j)
            CHECK(gram(i, j) == Catch::Approx(expected(i, j)).margin(1e-9));
}

TEST_CASE("tls_fit on noiseless collinear data", "[model]") {
    const Dataset ds(column({1.0, 2.0, 3.0}), std::vector<double>{2.0, 4.0, 6.0}, SymMatrix::identity(2));
    const TlsFit fit = tls_fit(ds);
    CHECK(fit.beta_hat(0, 0) == Catch::Approx(2.0).margin(1e-10));
    CHECK(fit.lambda == Catch::Approx(0.0).margin(1e-12));
}

TEST_CASE("tls_fit matches scalar orthogonal-regression closed form", "[model]") {
    for (std::uint64_t seed : {101u, 102u, 103u, 104u}) {
        const Dataset ds = noisy_scalar_dataset(seed, 50, 1.2, 0.05);
        const TlsFit fit = tls_fit(ds);
        std::vector<double> xs(ds.n()), ys(ds.n());
        for (std::size_t i = 0; i < ds.n(); ++i) {
            xs[i] = ds.x()(i, 0);
            ys[i] = ds.y()(i, 0);
        }
        CHECK(fit.beta_hat(0, 0) == Catch::Approx(oracle::scalar_tls_slope(xs, ys)).margin(1e-10));
    }
}

TEST_CASE("tls_fit residual identity and constraint", "[model][property]") {
    for (std::uint64_t seed : {201u, 202u, 203u, 204u, 205u}) {
        const SymMatrix sigma = random_sigma(2, seed * 7);
        const Dataset ds = noisy_scalar_dataset(seed, 40, -0.7, 0.08, sigma);
        const TlsFit fit = tls_fit(ds);

        // || [theta_hat, eps_hat] sigma^{-1/2} ||_F^2 == lambda
        const double fsq = fnorm_sq_weighted(fit, ds.sigma());
        CHECK(fsq == Catch::Approx(fit.lambda).epsilon(1e-8));

        // Y - eps_hat == (X - theta_hat) beta_hat
        for (std::size_t i = 0; i < ds.n(); ++i) {
            const double lhs = ds.y()(i, 0) - fit.fitted_eps(i, 0);
            const double rhs = (ds.x()(i, 0) - fit.fitted_theta(i, 0)) * fit.beta_hat(0, 0);
            CHECK(lhs == Catch::Approx(rhs).margin(1e-8));
        }
    }
}

TEST_CASE("tls_fit equals the eigenvector-ratio construction", "[model][property]") {
    for (std::uint64_t seed : {301u, 302u, 303u}) {
        const SymMatrix sigma = random_sigma(2, seed + 5);
        const Dataset ds = noisy_scalar_dataset(seed, 60, 2.5, 0.1, sigma);
        const TlsFit fit = tls_fit(ds);

        const Matrix t = transform(ds);
        GramAccumulator acc(2);
        for (std::size_t i = 0; i < ds.n(); ++i) acc.absorb(t.row(i));
        const auto eig = sym_eigen(acc.gram());
        const std::vector<double> v{eig.vectors(0, 0), eig.vectors(1, 0)};
        const auto u = inv_sqrt_spd(sigma).matvec(v);
        CHECK(fit.beta_hat(0, 0) == Catch::Approx(-u[0] / u[1]).epsilon(1e-8));
    }
}

TEST_CASE("tls_fit multivariate response satisfies its identities", "[model]") {
    // p = 2, q = 2: constraint and Frobenius identity still hold.
    Rng rng(411);
    const std::size_t n = 60;
    Matrix x(n, 2), y(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        const double z1 = 0.5 + static_cast<double>(i) / n;
        const double z2 = std::pow(static_cast<double>(i + 1) / n, 1.5);
        x(i, 0) = z1 + 0.05 * rng.normal();
        x(i, 1) = z2 + 0.05 * rng.normal();
        y(i, 0) = 2.0 * z1 - z2 + 0.05 * rng.normal();
        y(i, 1) = -0.5 * z1 + 1.5 * z2 + 0.05 * rng.normal();
    }
    const Dataset ds(std::move(x), std::move(y), SymMatrix::identity(4));
    const TlsFit fit = tls_fit(ds);

    CHECK(fnorm_sq_weighted(fit, ds.sigma()) == Catch::Approx(fit.lambda).epsilon(1e-8));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t c = 0; c < 2; ++c) {
            const double lhs = ds.y()(i, c) - fit.fitted_eps(i, c);
            double rhs = 0.0;
            for (std::size_t j = 0; j < 2; ++j)
                rhs += (ds.x()(i, j) - fit.fitted_theta(i, j)) * fit.beta_hat(j, c);
            CHECK(lhs == Catch::Approx(rhs).margin(1e-8));
        }
    }
}

TEST_CASE("tls_fit error paths", "[model]") {
    CHECK_THROWS_AS(Dataset(column({1.0}), std::vector<double>{1.0}, SymMatrix::identity(2)),
                    InsufficientData);

    // Eigenvalue tie: perfectly isotropic data has no unique TLS direction.
    Matrix x(4, 1);
    std::vector<double> y(4);
    x(0, 0) = 1.0; y[0] = 0.0;
    x(1, 0) = -1.0; y[1] = 0.0;
    x(2, 0) = 0.0; y[2] = 1.0;
    x(3, 0) = 0.0; y[3] = -1.0;
    const Dataset iso(std::move(x), y, SymMatrix::identity(2));
    CHECK_THROWS_AS(tls_fit(iso), NonIdentifiable);
}

TEST_CASE("project_out centers with an intercept column", "[model]") {
    const Dataset ds(column({1.0, 1.0, 1.0, 1.0}), std::vector<double>{1.0, 2.0, 3.0, 94.0},
                     SymMatrix::identity(2));
    const Dataset centered = project_out(ds, ExactRegressors::intercept(4));
    const double mean = (1.0 + 2.0 + 3.0 + 94.0) / 4.0;
    for (std::size_t i = 0; i < 4; ++i)
        CHECK(centered.y()(i, 0) == Catch::Approx(ds.y()(i, 0) - mean).margin(1e-12));

    // W' R Y == 0
    double dot = 0.0;
    for (std::size_t i = 0; i < 4; ++i) dot += centered.y()(i, 0);
    CHECK(dot == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("project_out simple centering example", "[model]") {
    const Dataset ds(column({2.0, 4.0, 6.0}), std::vector<double>{1.0, 2.0, 3.0}, SymMatrix::identity(2));
    const Dataset out = project_out(ds, ExactRegressors::intercept(3));
    CHECK(out.y()(0, 0) == Catch::Approx(-1.0));
    CHECK(out.y()(1, 0) == Catch::Approx(0.0).margin(1e-14));
    CHECK(out.y()(2, 0) == Catch::Approx(1.0));
}

TEST_CASE("project_out rejects bad W", "[model]") {
    const Dataset ds(column({1.0, 2.0, 3.0, 4.0}), std::vector<double>{1.0, 2.0, 3.0, 4.0},
                     SymMatrix::identity(2));

    Matrix dup(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        dup(i, 0) = 1.0;
        dup(i, 1) = 2.0; // collinear with the first column
    }
    CHECK_THROWS_AS(project_out(ds, ExactRegressors{dup}), RankDeficient);

    Matrix full = Matrix::identity(4); // w == n
    CHECK_THROWS_AS(project_out(ds, ExactRegressors{full}), InvalidArgument);
}

TEST_CASE("projection is idempotent", "[model][property]") {
    Rng rng(512);
    const std::size_t n = 25;
    Matrix w(n, 2);
    for (std::size_t i = 0; i < n; ++i) {
        w(i, 0) = 1.0;
        w(i, 1) = rng.normal();
    }
    Matrix x(n, 1);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        x(i, 0) = rng.normal();
        y[i] = rng.normal();
    }
    const Dataset ds(std::move(x), y, SymMatrix::identity(2));
    const ExactRegressors ex{w};
    const Dataset once = project_out(ds, ex);
    const Dataset twice = project_out(once, ex);
    for (std::size_t i = 0; i < n; ++i) {
        CHECK(twice.x()(i, 0) == Catch::Approx(once.x()(i, 0)).margin(1e-12));
        CHECK(twice.y()(i, 0) == Catch::Approx(once.y()(i, 0)).margin(1e-12));
    }

    // orthogonality of the projected response to W
    for (std::size_t c = 0; c < 2; ++c) {
        double dot = 0.0;
        for (std::size_t i = 0; i < n; ++i) dot += w(i, c) * once.y()(i, 0);
        CHECK(dot == Catch::Approx(0.0).margin(1e-10));
    }
}

TEST_CASE("rescale_random_spacing", "[model]") {
    const Dataset ds(column({100.0, 50.0, -25.0, 10.0}), std::vector<double>{5.0, 2.0, 1.0, 4.0},
                     SymMatrix::identity(2));
    const Dataset scaled = rescale_random_spacing(ds, 1.0);
    for (std::size_t i = 0; i < 4; ++i) {
        CHECK(scaled.x()(i, 0) == Catch::Approx(ds.x()(i, 0) / 101.0));
        CHECK(scaled.y()(i, 0) == Catch::Approx(ds.y()(i, 0) / 101.0));
    }

    // slope invariance under the common rescaling
    const Dataset noisy = noisy_scalar_dataset(611, 50, 1.7, 0.05);
    const double b0 = tls_fit(noisy).beta_hat(0, 0);
    const double b1 = tls_fit(rescale_random_spacing(noisy, 2.0)).beta_hat(0, 0);
    CHECK(b1 == Catch::Approx(b0).epsilon(1e-10));

    Matrix x2(4, 2);
    for (std::size_t i = 0; i < 4; ++i) {
        x2(i, 0) = 1.0 + i;
        x2(i, 1) = 2.0 + i;
    }
    const Dataset p2(std::move(x2), std::vector<double>{1.0, 2.0, 3.0, 4.0}, SymMatrix::identity(3));
    CHECK_THROWS_AS(rescale_random_spacing(p2), InvalidArgument);
}
