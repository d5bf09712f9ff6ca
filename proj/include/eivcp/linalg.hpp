#pragma once

// Dense kernels for the small ((p+q) x (p+q)) symmetric matrices this
// library works with: cyclic Jacobi eigen-decomposition, SPD inverse
// square root, and incremental Gram accumulation.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "eivcp/errors.hpp"

namespace eivcp {

/// Row-major dense matrix. Used for data blocks (n x p) and eigenvector
/// bundles; no algebraic structure implied.
class Matrix {
public:
    Matrix() = default;

    explicit Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
    std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

    const std::vector<double>& data() const { return data_; }
    std::vector<double>& data() { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) {
    if (a.cols() != b.rows()) throw InvalidArgument("matmul: dimension mismatch");
    Matrix c(a.rows(), b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
        for (std::size_t k = 0; k < a.cols(); ++k) {
            const double aik = a(i, k);
            if (aik == 0.0) continue;
            for (std::size_t j = 0; j < b.cols(); ++j) c(i, j) += aik * b(k, j);
        }
    }
    return c;
}

inline Matrix transpose(const Matrix& a) {
    Matrix t(a.cols(), a.rows());
    for (std::size_t i = 0; i < a.rows(); ++i)
        for (std::size_t j = 0; j < a.cols(); ++j) t(j, i) = a(i, j);
    return t;
}

/// Symmetric matrix with full storage; writes keep both triangles in sync,
/// so entries[i][j] == entries[j][i] holds exactly by construction.
class SymMatrix {
public:
    SymMatrix() = default;

    explicit SymMatrix(std::size_t dim) : dim_(dim), data_(dim * dim, 0.0) {
        if (dim == 0) throw InvalidArgument("SymMatrix: dim must be >= 1");
    }

    static SymMatrix identity(std::size_t dim) {
        SymMatrix m(dim);
        for (std::size_t i = 0; i < dim; ++i) m.data_[i * dim + i] = 1.0;
        return m;
    }

    static SymMatrix diagonal(const std::vector<double>& d) {
        SymMatrix m(d.size());
        for (std::size_t i = 0; i < d.size(); ++i) m.data_[i * d.size() + i] = d[i];
        return m;
    }

    /// Builds from a general square matrix; entries further than `tol`
    /// (relative) from symmetric are rejected, small asymmetry is averaged.
    static SymMatrix from_dense(const Matrix& a, double tol = 1e-9) {
        if (a.rows() != a.cols()) throw InvalidMatrix("from_dense: not square");
        SymMatrix m(a.rows());
        const double scale = 1.0 + a.frobenius_norm();
        for (std::size_t i = 0; i < a.rows(); ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                if (std::abs(a(i, j) - a(j, i)) > tol * scale)
                    throw InvalidMatrix("from_dense: asymmetry exceeds tolerance");
                m.set(i, j, 0.5 * (a(i, j) + a(j, i)));
            }
        }
        return m;
    }

    std::size_t dim() const { return dim_; }

    double operator()(std::size_t i, std::size_t j) const { return data_[i * dim_ + j]; }

    void set(std::size_t i, std::size_t j, double v) {
        data_[i * dim_ + j] = v;
        data_[j * dim_ + i] = v;
    }

    void add(std::size_t i, std::size_t j, double v) { set(i, j, (*this)(i, j) + v); }

    double trace() const {
        double t = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) t += data_[i * dim_ + i];
        return t;
    }

    double frobenius_norm() const {
        double s = 0.0;
        for (double v : data_) s += v * v;
        return std::sqrt(s);
    }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(),
                           [](double v) { return std::isfinite(v); });
    }

    Matrix to_dense() const {
        Matrix m(dim_, dim_);
        for (std::size_t i = 0; i < dim_; ++i)
            for (std::size_t j = 0; j < dim_; ++j) m(i, j) = (*this)(i, j);
        return m;
    }

    /// v' M v for a vector of matching length.
    double quad_form(std::span<const double> v) const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim_; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) r += (*this)(i, j) * v[j];
            s += v[i] * r;
        }
        return s;
    }

    std::vector<double> matvec(std::span<const double> v) const {
        std::vector<double> out(dim_, 0.0);
        for (std::size_t i = 0; i < dim_; ++i) {
            double r = 0.0;
            for (std::size_t j = 0; j < dim_; ++j) r += (*this)(i, j) * v[j];
            out[i] = r;
        }
        return out;
    }

private:
    std::size_t dim_ = 0;
    std::vector<double> data_;
};

struct EigenDecomposition {
    std::vector<double> values; // ascending
    Matrix vectors;             // column j is the eigenvector of values[j]
};

namespace detail {

inline double offdiag_frobenius(const SymMatrix& a) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.dim(); ++i)
        for (std::size_t j = i + 1; j < a.dim(); ++j) s += 2.0 * a(i, j) * a(i, j);
    return std::sqrt(s);
}

} // namespace detail

/// Eigen-decomposition of a symmetric matrix by cyclic Jacobi rotations.
/// Sweeps until the off-diagonal Frobenius norm falls below 1e-13 relative
/// to the matrix norm. Eigenvalues are returned ascending with matching
/// orthonormal eigenvectors.
inline EigenDecomposition sym_eigen(const SymMatrix& m) {
    if (!m.all_finite()) throw InvalidMatrix("sym_eigen: non-finite entries");
    const std::size_t n = m.dim();
    SymMatrix a = m;
    Matrix v = Matrix::identity(n);

    const double norm = m.frobenius_norm();
    const double tol = 1e-13 * std::max(norm, 1e-300);

    constexpr int max_sweeps = 64;
    for (int sweep = 0; sweep < max_sweeps; ++sweep) {
        if (detail::offdiag_frobenius(a) <= tol) break;
        for (std::size_t p = 0; p + 1 < n; ++p) {
            for (std::size_t q = p + 1; q < n; ++q) {
                const double apq = a(p, q);
                if (apq == 0.0) continue;
                // Rotation angle chosen to annihilate a(p,q).
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0.0)
                                     ? 1.0 / (theta + std::sqrt(theta * theta + 1.0))
                                     : 1.0 / (theta - std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double s = t * c;

                const double app = a(p, p), aqq = a(q, q);
                a.set(p, p, app - t * apq);
                a.set(q, q, aqq + t * apq);
                a.set(p, q, 0.0);
                for (std::size_t k = 0; k < n; ++k) {
                    if (k == p || k == q) continue;
                    const double akp = a(k, p), akq = a(k, q);
                    a.set(k, p, c * akp - s * akq);
                    a.set(k, q, s * akp + c * akq);
                }
                for (std::size_t k = 0; k < n; ++k) {
                    const double vkp = v(k, p), vkq = v(k, q);
                    v(k, p) = c * vkp - s * vkq;
                    v(k, q) = s * vkp + c * vkq;
                }
            }
        }
    }
    if (detail::offdiag_frobenius(a) > 1e-10 * std::max(norm, 1.0))
        throw NumericalIssue("sym_eigen: Jacobi sweeps did not converge");

    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::sort(order.begin(), order.end(),
              [&](std::size_t i, std::size_t j) { return a(i, i) < a(j, j); });

    EigenDecomposition out;
    out.values.resize(n);
    out.vectors = Matrix(n, n);
    for (std::size_t j = 0; j < n; ++j) {
        out.values[j] = a(order[j], order[j]);
        for (std::size_t i = 0; i < n; ++i) out.vectors(i, j) = v(i, order[j]);
    }
    return out;
}

inline double smallest_eigenvalue(const SymMatrix& m) {
    return sym_eigen(m).values.front();
}

/// Sum of the q smallest eigenvalues; q == dim gives the trace.
inline double sum_q_smallest(const SymMatrix& m, std::size_t q) {
    if (q < 1 || q > m.dim()) throw InvalidArgument("sum_q_smallest: q out of range");
    const auto eig = sym_eigen(m);
    double s = 0.0;
    for (std::size_t j = 0; j < q; ++j) s += eig.values[j];
    return s;
}

namespace detail {

inline double pd_tolerance(const SymMatrix& m) {
    return 1e-12 * m.trace() / static_cast<double>(m.dim());
}

inline SymMatrix spectral_power(const SymMatrix& m, double exponent, const char* what) {
    const auto eig = sym_eigen(m);
    const double tol = pd_tolerance(m);
    if (eig.values.front() <= tol)
        throw NotPositiveDefinite(std::string(what) + ": smallest eigenvalue below tolerance");
    const std::size_t n = m.dim();
    SymMatrix out(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = 0.0;
            for (std::size_t k = 0; k < n; ++k)
                s += eig.vectors(i, k) * std::pow(eig.values[k], exponent) * eig.vectors(j, k);
            out.set(i, j, s);
        }
    }
    return out;
}

} // namespace detail

/// Symmetric inverse square root of an SPD matrix: r with r*m*r == I.
inline SymMatrix inv_sqrt_spd(const SymMatrix& m) {
    if (!m.all_finite()) throw InvalidMatrix("inv_sqrt_spd: non-finite entries");
    return detail::spectral_power(m, -0.5, "inv_sqrt_spd");
}

/// Symmetric square root of an SPD matrix.
inline SymMatrix sqrt_spd(const SymMatrix& m) {
    if (!m.all_finite()) throw InvalidMatrix("sqrt_spd: non-finite entries");
    return detail::spectral_power(m, 0.5, "sqrt_spd");
}

/// Incrementally accumulates M'M one row at a time. Entries use Kahan
/// compensated summation: the downstream eigenvalue sweep subtracts
/// near-equal quantities, so plain accumulation loses digits for long runs.
class GramAccumulator {
public:
    explicit GramAccumulator(std::size_t dim)
        : dim_(dim), gram_(dim), comp_(dim), count_(0) {
        if (dim == 0) throw InvalidArgument("GramAccumulator: dim must be >= 1");
    }

    std::size_t dim() const { return dim_; }
    std::size_t count() const { return count_; }
    const SymMatrix& gram() const { return gram_; }

    void absorb(std::span<const double> row) {
        if (row.size() != dim_) throw InvalidArgument("GramAccumulator: row length mismatch");
        for (std::size_t i = 0; i < dim_; ++i) {
            for (std::size_t j = 0; j <= i; ++j) {
                const double term = row[i] * row[j] - comp_(i, j);
                const double sum = gram_(i, j) + term;
                comp_.set(i, j, (sum - gram_(i, j)) - term);
                gram_.set(i, j, sum);
            }
        }
        ++count_;
    }

private:
    std::size_t dim_;
    SymMatrix gram_;
    SymMatrix comp_;
    std::size_t count_;
};

/// Functional update: returns a copy of `acc` with one more row absorbed.
inline GramAccumulator gram_update(const GramAccumulator& acc, std::span<const double> row) {
    GramAccumulator next = acc;
    next.absorb(row);
    return next;
}

/// Solves a small square system a*x = b by Gaussian elimination with
/// partial pivoting. Throws DegenerateFit on (numerically) singular a.
inline std::vector<double> solve_linear(Matrix a, std::vector<double> b) {
    const std::size_t n = a.rows();
    if (a.cols() != n || b.size() != n) throw InvalidArgument("solve_linear: shape mismatch");
    double scale = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < n; ++j) scale = std::max(scale, std::abs(a(i, j)));
    for (std::size_t col = 0; col < n; ++col) {
        std::size_t piv = col;
        for (std::size_t r = col + 1; r < n; ++r)
            if (std::abs(a(r, col)) > std::abs(a(piv, col))) piv = r;
        if (std::abs(a(piv, col)) <= 1e-14 * std::max(scale, 1e-300))
            throw DegenerateFit("solve_linear: singular matrix");
        if (piv != col) {
            for (std::size_t j = 0; j < n; ++j) std::swap(a(col, j), a(piv, j));
            std::swap(b[col], b[piv]);
        }
        for (std::size_t r = col + 1; r < n; ++r) {
            const double f = a(r, col) / a(col, col);
            if (f == 0.0) continue;
            for (std::size_t j = col; j < n; ++j) a(r, j) -= f * a(col, j);
            b[r] -= f * b[col];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= a(i, j) * x[j];
        x[i] = s / a(i, i);
    }
    return x;
}

} // namespace eivcp
