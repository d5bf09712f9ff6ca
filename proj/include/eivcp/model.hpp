#pragma once

// Errors-in-variables data model: observed covariates X carry additive
// noise around unknown true regressors, the response shares a known (up to
// scale) joint error covariance with them. Fitting minimizes the weighted
// Frobenius norm of the joint corrections, i.e. generalized total least
// squares / orthogonal regression.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"

namespace eivcp {

/// Observed (X, Y) with joint error covariance sigma (dim p+q).
/// Immutable after construction; fits on distinct datasets may run
/// concurrently.
class Dataset {
public:
    Dataset(Matrix x, Matrix y, SymMatrix sigma)
        : x_(std::move(x)), y_(std::move(y)), sigma_(std::move(sigma)) {
        if (x_.rows() != y_.rows())
            throw InvalidArgument("Dataset: X and Y row counts differ");
        if (x_.cols() == 0 || y_.cols() == 0)
            throw InvalidArgument("Dataset: empty X or Y");
        if (sigma_.dim() != x_.cols() + y_.cols())
            throw InvalidArgument("Dataset: sigma dimension must be p+q");
        if (x_.rows() < x_.cols() + y_.cols())
            throw InsufficientData("Dataset: need n >= p+q rows");
        if (!x_.all_finite() || !y_.all_finite() || !sigma_.all_finite())
            throw InvalidMatrix("Dataset: non-finite entries");
    }

    /// Convenience constructor for the univariate response case.
    Dataset(Matrix x, const std::vector<double>& y, SymMatrix sigma)
        : Dataset(std::move(x), column(y), std::move(sigma)) {}

    std::size_t n() const { return x_.rows(); }
    std::size_t p() const { return x_.cols(); }
    std::size_t q() const { return y_.cols(); }

    const Matrix& x() const { return x_; }
    const Matrix& y() const { return y_; }
    const SymMatrix& sigma() const { return sigma_; }

    /// Joint data row [x_i, y_i] of length p+q.
    std::vector<double> joint_row(std::size_t i) const {
        std::vector<double> r(p() + q());
        for (std::size_t j = 0; j < p(); ++j) r[j] = x_(i, j);
        for (std::size_t j = 0; j < q(); ++j) r[p() + j] = y_(i, j);
        return r;
    }

private:
    static Matrix column(const std::vector<double>& v) {
        Matrix m(v.size(), 1);
        for (std::size_t i = 0; i < v.size(); ++i) m(i, 0) = v[i];
        return m;
    }

    Matrix x_;
    Matrix y_;
    SymMatrix sigma_;
};

/// [X, Y] * sigma^{-1/2}: the whitened joint data whose partial Gram
/// matrices drive everything downstream.
inline Matrix transform(const Dataset& ds) {
    const SymMatrix w = inv_sqrt_spd(ds.sigma());
    const std::size_t d = ds.p() + ds.q();
    Matrix out(ds.n(), d);
    for (std::size_t i = 0; i < ds.n(); ++i) {
        const auto row = ds.joint_row(i);
        for (std::size_t j = 0; j < d; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < d; ++k) s += row[k] * w(k, j);
            out(i, j) = s;
        }
    }
    return out;
}

struct TlsFit {
    Matrix beta_hat;     // p x q
    double lambda = 0.0; // smallest eigenvalue (q=1) or sum of q smallest
    Matrix fitted_theta; // n x p
    Matrix fitted_eps;   // n x q
};

namespace detail {

inline Matrix x_block(const SymMatrix& sigma, std::size_t p) {
    Matrix b(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) b(i, j) = sigma(i, j);
    return b;
}

inline Matrix cross_block(const SymMatrix& sigma, std::size_t p, std::size_t q) {
    Matrix b(p, q);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < q; ++j) b(i, j) = sigma(i, p + j);
    return b;
}

} // namespace detail

/// Generalized TLS fit. The fitted corrections project the whitened rows
/// onto the span of the eigenvectors belonging to the q smallest
/// eigenvalues, so ||[theta_hat, eps_hat] sigma^{-1/2}||_F^2 equals lambda.
///
/// For q = 1 the slope is recovered through the closed form
///   (X'X - lambda * Sigma_Theta)^{-1} (X'Y - lambda * Sigma_Theta_eps),
/// which coincides with the eigenvector-ratio construction; for q > 1 the
/// eigenvector route is used directly.
inline TlsFit tls_fit(const Dataset& ds) {
    const std::size_t n = ds.n(), p = ds.p(), q = ds.q(), d = p + q;
    if (n < d) throw InsufficientData("tls_fit: need n >= p+q rows");

    const Matrix t = transform(ds);
    GramAccumulator acc(d);
    for (std::size_t i = 0; i < n; ++i) acc.absorb(t.row(i));
    const auto eig = sym_eigen(acc.gram());

    double lambda = 0.0;
    for (std::size_t j = 0; j < q; ++j) lambda += eig.values[j];

    // The minimizer is unique only if the invariant subspace of the q
    // smallest eigenvalues is separated from the rest.
    const double top = std::abs(eig.values[d - 1]);
    const double gap = eig.values[q] - eig.values[q - 1];
    if (gap <= 1e-10 * std::max(top, 1e-300))
        throw NonIdentifiable("tls_fit: eigenvalue tie at the subspace split");

    // Fitted corrections: rows of T projected on V_q, mapped back by
    // sigma^{1/2}.
    Matrix vq(d, q);
    for (std::size_t i = 0; i < d; ++i)
        for (std::size_t j = 0; j < q; ++j) vq(i, j) = eig.vectors(i, j);
    const Matrix coords = matmul(t, vq);              // n x q
    const Matrix corr_t = matmul(coords, transpose(vq)); // n x d, whitened scale
    const SymMatrix half = sqrt_spd(ds.sigma());
    const Matrix corr = matmul(corr_t, half.to_dense());

    TlsFit fit;
    fit.lambda = lambda;
    fit.fitted_theta = Matrix(n, p);
    fit.fitted_eps = Matrix(n, q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) fit.fitted_theta(i, j) = corr(i, j);
        for (std::size_t j = 0; j < q; ++j) fit.fitted_eps(i, j) = corr(i, p + j);
    }

    if (q == 1) {
        // Normal equations in the original coordinates.
        GramAccumulator xacc(p);
        std::vector<double> xty(p, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            xacc.absorb(ds.x().row(i));
            for (std::size_t j = 0; j < p; ++j) xty[j] += ds.x()(i, j) * ds.y()(i, 0);
        }
        Matrix a(p, p);
        std::vector<double> b(p);
        const Matrix st = detail::x_block(ds.sigma(), p);
        const Matrix sc = detail::cross_block(ds.sigma(), p, q);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) a(i, j) = xacc.gram()(i, j) - lambda * st(i, j);
            b[i] = xty[i] - lambda * sc(i, 0);
        }
        std::vector<double> beta;
        try {
            beta = solve_linear(a, b);
        } catch (const DegenerateFit&) {
            throw DegenerateFit("tls_fit: X'X - lambda*Sigma_Theta is singular");
        }
        fit.beta_hat = Matrix(p, 1);
        for (std::size_t i = 0; i < p; ++i) fit.beta_hat(i, 0) = beta[i];
    } else {
        // B = -U_x U_y^{-1} with U = sigma^{-1/2} V_q; the corrected rows
        // satisfy U' [x, y] = 0.
        const SymMatrix w = inv_sqrt_spd(ds.sigma());
        const Matrix u = matmul(w.to_dense(), vq); // d x q
        Matrix uy(q, q);
        for (std::size_t i = 0; i < q; ++i)
            for (std::size_t j = 0; j < q; ++j) uy(i, j) = u(p + i, j);
        fit.beta_hat = Matrix(p, q);
        for (std::size_t r = 0; r < p; ++r) {
            // Row r of B solves B_row * U_y = -U_x_row, i.e. U_y' b = -u_x'.
            std::vector<double> rhs(q);
            for (std::size_t j = 0; j < q; ++j) rhs[j] = -u(r, j);
            std::vector<double> sol;
            try {
                sol = solve_linear(transpose(uy), rhs);
            } catch (const DegenerateFit&) {
                throw DegenerateFit("tls_fit: response block of the null subspace is singular");
            }
            for (std::size_t j = 0; j < q; ++j) fit.beta_hat(r, j) = sol[j];
        }
    }
    return fit;
}

/// Exact (error-free) regressors to be projected out, e.g. an intercept.
struct ExactRegressors {
    Matrix w; // n x w_cols, full column rank

    static ExactRegressors intercept(std::size_t n) {
        Matrix w(n, 1, 1.0);
        return ExactRegressors{std::move(w)};
    }
};

/// Applies R = I - W (W'W)^{-1} W' to X and Y without forming the n x n
/// projector; sigma passes through unchanged.
inline Dataset project_out(const Dataset& ds, const ExactRegressors& ex) {
    const std::size_t n = ds.n(), w = ex.w.cols();
    if (ex.w.rows() != n) throw InvalidArgument("project_out: W row count mismatch");
    if (w >= n) throw InvalidArgument("project_out: need w < n");

    GramAccumulator wacc(w);
    for (std::size_t i = 0; i < n; ++i) wacc.absorb(ex.w.row(i));
    const auto eig = sym_eigen(wacc.gram());
    if (eig.values.front() <= 1e-12 * std::max(1.0, eig.values.back()))
        throw RankDeficient("project_out: W is rank deficient");

    auto apply = [&](const Matrix& m) {
        const Matrix wtm = matmul(transpose(ex.w), m); // w x cols
        Matrix coef(w, m.cols());
        for (std::size_t c = 0; c < m.cols(); ++c) {
            std::vector<double> rhs(w);
            for (std::size_t i = 0; i < w; ++i) rhs[i] = wtm(i, c);
            const auto sol = solve_linear(wacc.gram().to_dense(), rhs);
            for (std::size_t i = 0; i < w; ++i) coef(i, c) = sol[i];
        }
        const Matrix fitted = matmul(ex.w, coef);
        Matrix out(m.rows(), m.cols());
        for (std::size_t i = 0; i < m.rows(); ++i)
            for (std::size_t c = 0; c < m.cols(); ++c) out(i, c) = m(i, c) - fitted(i, c);
        return out;
    };

    return Dataset(apply(ds.x()), apply(ds.y()), ds.sigma());
}

/// Common rescaling for randomly spaced time series: both axes divided by
/// max |X| + eps, which leaves the slope unchanged. Univariate only.
inline Dataset rescale_random_spacing(const Dataset& ds, double eps = 1.0) {
    if (ds.p() != 1) throw InvalidArgument("rescale_random_spacing: requires p == 1");
    if (!(eps > 0.0)) throw InvalidArgument("rescale_random_spacing: eps must be > 0");
    double mx = 0.0;
    for (std::size_t i = 0; i < ds.n(); ++i) mx = std::max(mx, std::abs(ds.x()(i, 0)));
    const double div = mx + eps;
    Matrix x(ds.n(), 1), y(ds.n(), ds.q());
    for (std::size_t i = 0; i < ds.n(); ++i) {
        x(i, 0) = ds.x()(i, 0) / div;
        for (std::size_t j = 0; j < ds.q(); ++j) y(i, j) = ds.y()(i, j) / div;
    }
    return Dataset(std::move(x), std::move(y), ds.sigma());
}

} // namespace eivcp
