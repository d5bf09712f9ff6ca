#pragma once

// Computable quantities from the detectability theory: the alpha/phi
// constants behind the invariance principle, the change-detectability
// margin and its sharpened variant, and the per-t margin profiles that
// govern changepoint-estimator consistency. Univariate response only.

#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "eivcp/datagen.hpp"
#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"

namespace eivcp {

/// Blocks of sigma^{-1/2} for response dimension one: the p x p covariate
/// block, the p x 1 cross block and the scalar response block.
struct CovBlocks {
    SymMatrix sigma_inv_sqrt;
    Matrix bar_theta;              // p x p
    std::vector<double> bar_cross; // p
    double bar_eps = 0.0;

    static CovBlocks from_sigma(const SymMatrix& sigma) {
        CovBlocks b;
        b.sigma_inv_sqrt = inv_sqrt_spd(sigma);
        const std::size_t p = sigma.dim() - 1;
        if (p == 0) throw InvalidArgument("CovBlocks: sigma must have dim p+1 with p >= 1");
        b.bar_theta = Matrix(p, p);
        b.bar_cross.resize(p);
        for (std::size_t i = 0; i < p; ++i) {
            for (std::size_t j = 0; j < p; ++j) b.bar_theta(i, j) = b.sigma_inv_sqrt(i, j);
            b.bar_cross[i] = b.sigma_inv_sqrt(i, p);
        }
        b.bar_eps = b.sigma_inv_sqrt(p, p);
        return b;
    }

    std::size_t p() const { return bar_cross.size(); }
};

namespace detail {

/// bar_Sigma_Theta + bar_Sigma_cross * b' (the "m" factor; its transpose
/// with b = beta is the full-rank matrix vartheta).
inline Matrix m_factor(const CovBlocks& blocks, const std::vector<double>& b) {
    const std::size_t p = blocks.p();
    Matrix m = blocks.bar_theta;
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j) m(i, j) += blocks.bar_cross[i] * b[j];
    return m;
}

/// bar_Sigma_cross + b * bar_Sigma_eps (the "s" vector).
inline std::vector<double> s_vector(const CovBlocks& blocks, const std::vector<double>& b) {
    std::vector<double> s = blocks.bar_cross;
    for (std::size_t i = 0; i < s.size(); ++i) s[i] += b[i] * blocks.bar_eps;
    return s;
}

inline std::vector<double> add(std::vector<double> a, const std::vector<double>& b) {
    for (std::size_t i = 0; i < a.size(); ++i) a[i] += b[i];
    return a;
}

inline double dot(const std::vector<double>& a, const std::vector<double>& b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline SymMatrix sandwich(const Matrix& left, const SymMatrix& mid) {
    // left * mid * left', symmetrized against round-off.
    const Matrix tmp = matmul(left, mid.to_dense());
    const Matrix full = matmul(tmp, transpose(left));
    return SymMatrix::from_dense(full, 1e-9);
}

inline void require_pd(const SymMatrix& m, const char* what) {
    if (smallest_eigenvalue(m) <= 0.0)
        throw AssumptionViolated(std::string(what) + " must be positive definite");
}

} // namespace detail

struct AlphaPhi {
    std::vector<double> alpha;
    double phi = 0.0;
    Matrix vartheta; // p x p, full rank under the variance assumption
};

/// alpha = (barS_Theta + beta barS_cross')^{-1} (barS_cross + beta barS_eps)
/// and phi = barS_eps - barS_cross' alpha; vartheta is the inverted factor.
inline AlphaPhi compute_alpha_phi(const CovBlocks& blocks, const std::vector<double>& beta) {
    const std::size_t p = blocks.p();
    if (beta.size() != p) throw InvalidArgument("compute_alpha_phi: beta length must be p");

    const Matrix m = detail::m_factor(blocks, beta); // = vartheta'
    const Matrix vartheta = transpose(m);
    const std::vector<double> s = detail::s_vector(blocks, beta);

    AlphaPhi out;
    out.vartheta = vartheta;
    try {
        out.alpha = solve_linear(vartheta, s);
    } catch (const DegenerateFit&) {
        throw AssumptionViolated("compute_alpha_phi: vartheta is singular");
    }
    out.phi = blocks.bar_eps - detail::dot(blocks.bar_cross, out.alpha);
    return out;
}

/// Inputs for the detectability margin. The three design-moment matrices
/// are caller-supplied; additive_consistent records whether the full
/// moment splits into the two partial ones (it is reported, not enforced,
/// because the published closed-form margin example is only reproduced by
/// inputs that break the split).
struct DetectabilityInput {
    std::vector<double> beta;
    std::vector<double> delta;
    double sigma2 = 1.0;
    double zeta = 0.5;
    SymMatrix delta_zeta;
    SymMatrix delta_minus_zeta;
    SymMatrix delta_full;

    bool additive_consistent(double tol = 1e-8) const {
        double gap = 0.0, scale = 0.0;
        for (std::size_t i = 0; i < delta_full.dim(); ++i) {
            for (std::size_t j = 0; j < delta_full.dim(); ++j) {
                gap += std::pow(delta_full(i, j) - delta_zeta(i, j) - delta_minus_zeta(i, j), 2);
                scale += delta_full(i, j) * delta_full(i, j);
            }
        }
        return std::sqrt(gap) <= tol * (1.0 + std::sqrt(scale));
    }
};

struct MarginParts {
    double kappa = 0.0;
    std::vector<double> varphi;
    double eta = 0.0;
    double margin = 0.0; // eta*kappa - varphi'varphi
};

inline MarginParts detectability_margin(const DetectabilityInput& inp, const CovBlocks& blocks) {
    const std::size_t p = blocks.p();
    if (inp.beta.size() != p || inp.delta.size() != p)
        throw InvalidArgument("detectability_margin: beta/delta length must be p");
    if (!(inp.zeta > 0.0 && inp.zeta < 1.0))
        throw InvalidArgument("detectability_margin: zeta must be in (0,1)");
    detail::require_pd(inp.delta_zeta, "detectability_margin: Delta_zeta");
    detail::require_pd(inp.delta_minus_zeta, "detectability_margin: Delta_minus_zeta");
    detail::require_pd(inp.delta_full, "detectability_margin: Delta");

    const std::vector<double> beta_post = detail::add(inp.beta, inp.delta);
    const std::vector<double> s_pre = detail::s_vector(blocks, inp.beta);
    const std::vector<double> s_post = detail::s_vector(blocks, beta_post);
    const Matrix m_pre = detail::m_factor(blocks, inp.beta);
    const Matrix m_post = detail::m_factor(blocks, beta_post);

    MarginParts out;
    out.kappa = inp.delta_zeta.quad_form(s_pre) + inp.delta_minus_zeta.quad_form(s_post);

    const auto phi_pre = matmul(m_pre, [&] {
        Matrix c(p, 1);
        const auto v = inp.delta_zeta.matvec(s_pre);
        for (std::size_t i = 0; i < p; ++i) c(i, 0) = v[i];
        return c;
    }());
    const auto phi_post = matmul(m_post, [&] {
        Matrix c(p, 1);
        const auto v = inp.delta_minus_zeta.matvec(s_post);
        for (std::size_t i = 0; i < p; ++i) c(i, 0) = v[i];
        return c;
    }());
    out.varphi.resize(p);
    for (std::size_t i = 0; i < p; ++i) out.varphi[i] = phi_pre(i, 0) + phi_post(i, 0);

    // eta = lambda_min(m(beta) Delta m(beta)' + sigma^2 I) - sigma^2.
    SymMatrix core = detail::sandwich(m_pre, inp.delta_full);
    SymMatrix shifted(p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j <= i; ++j)
            shifted.set(i, j, core(i, j) + (i == j ? inp.sigma2 : 0.0));
    out.eta = smallest_eigenvalue(shifted) - inp.sigma2;

    out.margin = out.eta * out.kappa - detail::dot(out.varphi, out.varphi);
    return out;
}

/// Sharpened margin:
/// kappa + eta - sqrt((kappa + 2 sigma^2 + eta)^2
///   - 4 (kappa + sigma^2 - varphi'(vartheta' Delta vartheta + sigma^2 I)^{-1} varphi)
///       (sigma^2 + eta)).
/// A negative discriminant is reported as NumericalIssue, not clamped.
inline double sharpened_margin(const DetectabilityInput& inp, const CovBlocks& blocks) {
    const MarginParts parts = detectability_margin(inp, blocks);
    const std::size_t p = blocks.p();

    const Matrix vartheta = transpose(detail::m_factor(blocks, inp.beta));
    SymMatrix core = detail::sandwich(transpose(vartheta), inp.delta_full);
    Matrix shifted(p, p);
    for (std::size_t i = 0; i < p; ++i)
        for (std::size_t j = 0; j < p; ++j)
            shifted(i, j) = core(i, j) + (i == j ? inp.sigma2 : 0.0);

    std::vector<double> solved;
    try {
        solved = solve_linear(shifted, parts.varphi);
    } catch (const DegenerateFit&) {
        throw AssumptionViolated("sharpened_margin: vartheta'Delta vartheta + sigma^2 I singular");
    }
    const double correction = detail::dot(parts.varphi, solved);

    const double a = parts.kappa + 2.0 * inp.sigma2 + parts.eta;
    const double disc =
        a * a - 4.0 * (parts.kappa + inp.sigma2 - correction) * (inp.sigma2 + parts.eta);
    if (disc < 0.0) throw NumericalIssue("sharpened_margin: negative discriminant");
    return parts.kappa + parts.eta - std::sqrt(disc);
}

/// Second-moment profiles of a deterministic design, computed by finite
/// averaging at a reference sample size.
class DesignMomentProfile {
public:
    explicit DesignMomentProfile(const DesignSpec& spec, std::size_t n_ref = 100000)
        : p_(spec.p) {
        DesignSpec s = spec;
        s.n = n_ref;
        z_ = gen_design(s);
        n_ref_ = n_ref;
    }

    std::size_t p() const { return p_; }

    /// n^{-1} Z_{[nt]}' Z_{[nt]}.
    SymMatrix prefix_moment(double t) const {
        return range_moment(0, static_cast<std::size_t>(static_cast<double>(n_ref_) * t));
    }

    /// n^{-1} Z_{-[nt]}' Z_{-[nt]} (the remaining rows).
    SymMatrix suffix_moment(double t) const {
        return range_moment(static_cast<std::size_t>(static_cast<double>(n_ref_) * t), n_ref_);
    }

    SymMatrix full_moment() const { return range_moment(0, n_ref_); }

private:
    SymMatrix range_moment(std::size_t from, std::size_t to) const {
        GramAccumulator acc(p_);
        for (std::size_t i = from; i < to; ++i) acc.absorb(z_.row(i));
        SymMatrix m(p_);
        const double inv_n = 1.0 / static_cast<double>(n_ref_);
        for (std::size_t i = 0; i < p_; ++i)
            for (std::size_t j = 0; j <= i; ++j) m.set(i, j, acc.gram()(i, j) * inv_n);
        return m;
    }

    std::size_t p_;
    std::size_t n_ref_ = 0;
    Matrix z_;
};

struct ProfilePoint {
    double t = 0.0;
    bool post_side = false; // true for t > zeta, false for t < zeta
    bool skipped = false;   // t == zeta is undefined and skipped
    double value = 0.0;     // eta(t)kappa(t) - varphi(t)'varphi(t) (tilde version pre-change)
};

/// Margin profiles over a t grid. For t > zeta the window ends inside the
/// post-change regime; for t < zeta the mirrored (tilde) quantities apply.
inline std::vector<ProfilePoint> corollary_profiles(const DetectabilityInput& inp,
                                                    const CovBlocks& blocks,
                                                    const DesignMomentProfile& profile,
                                                    const std::vector<double>& t_grid) {
    const std::size_t p = blocks.p();
    if (profile.p() != p) throw InvalidArgument("corollary_profiles: design dimension mismatch");

    const std::vector<double> beta_post = detail::add(inp.beta, inp.delta);
    const std::vector<double> s_pre = detail::s_vector(blocks, inp.beta);
    const std::vector<double> s_post = detail::s_vector(blocks, beta_post);
    const Matrix m_pre = detail::m_factor(blocks, inp.beta);
    const Matrix m_post = detail::m_factor(blocks, beta_post);

    auto quad = [](const SymMatrix& a, const std::vector<double>& v) { return a.quad_form(v); };
    auto mv = [&](const Matrix& m, const std::vector<double>& v) {
        std::vector<double> out(p, 0.0);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j < p; ++j) out[i] += m(i, j) * v[j];
        return out;
    };
    auto lambda_min_shifted = [&](const SymMatrix& core, double shift) {
        SymMatrix s(p);
        for (std::size_t i = 0; i < p; ++i)
            for (std::size_t j = 0; j <= i; ++j)
                s.set(i, j, core(i, j) + (i == j ? shift : 0.0));
        return smallest_eigenvalue(s) - shift;
    };
    auto minus = [](const SymMatrix& a, const SymMatrix& b) {
        SymMatrix out(a.dim());
        for (std::size_t i = 0; i < a.dim(); ++i)
            for (std::size_t j = 0; j <= i; ++j) out.set(i, j, a(i, j) - b(i, j));
        return out;
    };

    std::vector<ProfilePoint> out;
    out.reserve(t_grid.size());
    for (double t : t_grid) {
        if (!(t > 0.0 && t < 1.0))
            throw InvalidArgument("corollary_profiles: t grid must lie in (0,1)");
        ProfilePoint pt;
        pt.t = t;
        if (std::abs(t - inp.zeta) < 1e-12) {
            pt.skipped = true;
            out.push_back(pt);
            continue;
        }
        if (t > inp.zeta) {
            pt.post_side = true;
            const SymMatrix window = minus(profile.prefix_moment(t), inp.delta_zeta);
            const double kappa_t = quad(inp.delta_zeta, s_pre) + quad(window, s_post);
            const auto varphi_t =
                detail::add(mv(m_pre, inp.delta_zeta.matvec(s_pre)), mv(m_post, window.matvec(s_post)));
            const double eta_t = lambda_min_shifted(
                detail::sandwich(m_pre, profile.prefix_moment(t)), t * inp.sigma2);
            pt.value = eta_t * kappa_t - detail::dot(varphi_t, varphi_t);
        } else {
            const SymMatrix window = minus(profile.suffix_moment(t), inp.delta_minus_zeta);
            const double kappa_t = quad(inp.delta_minus_zeta, s_pre) + quad(window, s_post);
            const auto varphi_t = detail::add(mv(m_pre, inp.delta_minus_zeta.matvec(s_pre)),
                                              mv(m_post, window.matvec(s_post)));
            const double eta_t = lambda_min_shifted(
                detail::sandwich(m_pre, profile.suffix_moment(t)), (1.0 - t) * inp.sigma2);
            pt.value = eta_t * kappa_t - detail::dot(varphi_t, varphi_t);
        }
        out.push_back(pt);
    }
    return out;
}

} // namespace eivcp
