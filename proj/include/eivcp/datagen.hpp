#pragma once

// Synthetic data engine for the simulation protocol: deterministic designs,
// weakly dependent error processes standardized to a target variance, and
// H0/HA dataset assembly with the generating truth kept for evaluation.

#include <cmath>
#include <cstdint>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"
#include "eivcp/model.hpp"
#include "eivcp/rng.hpp"

namespace eivcp {

enum class DesignKind { EquidistantLinear, PowerCurve, Custom };

struct DesignSpec {
    DesignKind kind = DesignKind::EquidistantLinear;
    std::size_t n = 0;
    std::size_t p = 1;
    double scale = 100.0;
    Matrix custom; // used when kind == Custom

    static DesignSpec equidistant(std::size_t n, double scale = 100.0) {
        return DesignSpec{DesignKind::EquidistantLinear, n, 1, scale, {}};
    }
    static DesignSpec power_curve(std::size_t n, double scale = 100.0) {
        return DesignSpec{DesignKind::PowerCurve, n, 2, scale, {}};
    }
};

/// Deterministic design matrix Z. Equidistant: Z_i1 = scale*i/(n+1);
/// power curve (p=2): scale*[i/(n+1), (i/(n+1))^{3/2}].
inline Matrix gen_design(const DesignSpec& spec) {
    if (spec.n < 1) throw InvalidArgument("gen_design: need n >= 1");
    switch (spec.kind) {
    case DesignKind::EquidistantLinear: {
        if (spec.p != 1) throw InvalidArgument("gen_design: equidistant-linear requires p == 1");
        Matrix z(spec.n, 1);
        for (std::size_t i = 1; i <= spec.n; ++i)
            z(i - 1, 0) = spec.scale * static_cast<double>(i) / static_cast<double>(spec.n + 1);
        return z;
    }
    case DesignKind::PowerCurve: {
        if (spec.p != 2) throw InvalidArgument("gen_design: power-curve requires p == 2");
        Matrix z(spec.n, 2);
        for (std::size_t i = 1; i <= spec.n; ++i) {
            const double u = static_cast<double>(i) / static_cast<double>(spec.n + 1);
            z(i - 1, 0) = spec.scale * u;
            z(i - 1, 1) = spec.scale * std::pow(u, 1.5);
        }
        return z;
    }
    case DesignKind::Custom:
        if (spec.custom.rows() != spec.n || spec.custom.cols() != spec.p)
            throw InvalidArgument("gen_design: custom matrix shape mismatch");
        return spec.custom;
    }
    throw InvalidArgument("gen_design: unknown kind");
}

enum class ErrorProcess { IID, AR1, ARCH1 };
enum class Innovation { Normal, StudentT3 };

struct ErrorProcessSpec {
    ErrorProcess process = ErrorProcess::IID;
    Innovation innovation = Innovation::Normal;
    double sigma = 1.0; // target standard deviation of the series
};

/// An error series of length n with variance sigma^2. AR(1) uses
/// coefficient 0.5 with innovation variance sigma^2*(1 - 0.25); ARCH(1)
/// uses s_t^2 = sigma^2/2 + 0.5 x_{t-1}^2. Both start from a draw with the
/// stationary variance, so no burn-in is needed. t3 innovations carry the
/// analytic 1/sqrt(3) standardization.
inline std::vector<double> gen_errors(const ErrorProcessSpec& spec, std::size_t n, Rng& rng) {
    if (n < 1) throw InvalidArgument("gen_errors: need n >= 1");
    if (!(spec.sigma > 0.0)) throw InvalidArgument("gen_errors: sigma must be > 0");

    auto unit_innovation = [&]() {
        return spec.innovation == Innovation::Normal ? rng.normal()
                                                     : rng.student_t3() / std::sqrt(3.0);
    };

    std::vector<double> x(n);
    switch (spec.process) {
    case ErrorProcess::IID:
        for (std::size_t t = 0; t < n; ++t) x[t] = spec.sigma * unit_innovation();
        break;
    case ErrorProcess::AR1: {
        const double innov_sd = spec.sigma * std::sqrt(1.0 - 0.25);
        x[0] = spec.sigma * unit_innovation();
        for (std::size_t t = 1; t < n; ++t) x[t] = 0.5 * x[t - 1] + innov_sd * unit_innovation();
        break;
    }
    case ErrorProcess::ARCH1: {
        const double a0 = 0.5 * spec.sigma * spec.sigma;
        x[0] = spec.sigma * unit_innovation();
        for (std::size_t t = 1; t < n; ++t) {
            const double s2 = a0 + 0.5 * x[t - 1] * x[t - 1];
            x[t] = std::sqrt(s2) * unit_innovation();
        }
        break;
    }
    }
    return x;
}

/// Full synthetic-experiment configuration. delta == 0 means H0 (tau is
/// ignored then); under HA the slope switches to beta+delta after row tau.
struct ScenarioSpec {
    DesignSpec design;
    std::vector<double> beta;
    std::vector<double> delta;
    std::size_t tau = 0;
    ErrorProcessSpec errors;
    SymMatrix sigma_matrix; // default-constructed -> identity of dim p+1
    std::uint64_t seed = 0;

    bool has_change() const {
        for (double d : delta)
            if (d != 0.0) return true;
        return false;
    }
};

/// What actually generated a dataset, for evaluating estimators against.
struct GenTruth {
    Matrix z;
    std::vector<double> beta;
    std::vector<double> delta;
    std::size_t tau = 0;
    Matrix theta;            // n x p measurement errors
    std::vector<double> eps; // response errors
};

/// Assembles X = Z + Theta and Y from a scenario. Each error coordinate
/// gets its own substream keyed by (seed, coordinate), so the series are
/// independent and the whole draw is reproducible bit-for-bit.
inline std::pair<Dataset, GenTruth> gen_dataset(const ScenarioSpec& spec) {
    const std::size_t n = spec.design.n, p = spec.design.p;
    if (n < 4) throw InvalidArgument("gen_dataset: need n >= 4");
    if (spec.beta.size() != p) throw InvalidArgument("gen_dataset: beta length must be p");
    if (spec.delta.size() != p) throw InvalidArgument("gen_dataset: delta length must be p");
    const bool change = spec.has_change();
    if (change && (spec.tau < 1 || spec.tau >= n))
        throw InvalidArgument("gen_dataset: tau must be in [1, n-1] under a change");

    const Matrix z = gen_design(spec.design);

    GenTruth truth;
    truth.z = z;
    truth.beta = spec.beta;
    truth.delta = spec.delta;
    truth.tau = change ? spec.tau : 0;
    truth.theta = Matrix(n, p);
    truth.eps.resize(n);

    for (std::size_t j = 0; j < p; ++j) {
        Rng rng(substream_seed(spec.seed, 0x54484554ULL, j));
        const auto series = gen_errors(spec.errors, n, rng);
        for (std::size_t i = 0; i < n; ++i) truth.theta(i, j) = series[i];
    }
    {
        Rng rng(substream_seed(spec.seed, 0x45505349ULL, p));
        truth.eps = gen_errors(spec.errors, n, rng);
    }

    Matrix x(n, p);
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = z(i, j) + truth.theta(i, j);
        double mean = 0.0;
        const bool after = change && i >= spec.tau; // rows are 1-based in the model
        for (std::size_t j = 0; j < p; ++j)
            mean += z(i, j) * (spec.beta[j] + (after ? spec.delta[j] : 0.0));
        y[i] = mean + truth.eps[i];
    }

    SymMatrix sigma = spec.sigma_matrix.dim() == 0 ? SymMatrix::identity(p + 1)
                                                   : spec.sigma_matrix;
    return {Dataset(std::move(x), y, std::move(sigma)), std::move(truth)};
}

// --- plain-text scenario configuration ------------------------------------

namespace detail {

inline std::string join_doubles(const std::vector<double>& v) {
    std::ostringstream os;
    os.precision(17);
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (i) os << ",";
        os << v[i];
    }
    return os.str();
}

inline std::vector<double> split_doubles(const std::string& s) {
    std::vector<double> out;
    std::istringstream is(s);
    std::string tok;
    while (std::getline(is, tok, ',')) {
        if (tok.empty()) continue;
        std::size_t pos = 0;
        const double v = std::stod(tok, &pos);
        out.push_back(v);
    }
    return out;
}

} // namespace detail

inline std::string design_kind_name(DesignKind k) {
    switch (k) {
    case DesignKind::EquidistantLinear: return "equidistant-linear";
    case DesignKind::PowerCurve: return "power-curve";
    case DesignKind::Custom: return "custom";
    }
    return "?";
}

inline DesignKind design_kind_from(const std::string& s) {
    if (s == "equidistant-linear") return DesignKind::EquidistantLinear;
    if (s == "power-curve") return DesignKind::PowerCurve;
    if (s == "custom") return DesignKind::Custom;
    throw ParseError("unknown design.kind: " + s);
}

inline std::string process_name(ErrorProcess pr) {
    switch (pr) {
    case ErrorProcess::IID: return "IID";
    case ErrorProcess::AR1: return "AR1";
    case ErrorProcess::ARCH1: return "ARCH1";
    }
    return "?";
}

inline ErrorProcess process_from(const std::string& s) {
    if (s == "IID") return ErrorProcess::IID;
    if (s == "AR1") return ErrorProcess::AR1;
    if (s == "ARCH1") return ErrorProcess::ARCH1;
    throw ParseError("unknown errors.process: " + s);
}

inline std::string innovation_name(Innovation in) {
    return in == Innovation::Normal ? "standard-normal" : "student-t3";
}

inline Innovation innovation_from(const std::string& s) {
    if (s == "standard-normal") return Innovation::Normal;
    if (s == "student-t3") return Innovation::StudentT3;
    throw ParseError("unknown errors.innovation: " + s);
}

/// key = value serialization; sigma_matrix is row-major comma-separated,
/// "identity" when defaulted.
inline std::string serialize_scenario(const ScenarioSpec& spec) {
    std::ostringstream os;
    os.precision(17);
    os << "design.kind = " << design_kind_name(spec.design.kind) << "\n";
    os << "design.n = " << spec.design.n << "\n";
    os << "design.p = " << spec.design.p << "\n";
    os << "design.scale = " << spec.design.scale << "\n";
    os << "beta = " << detail::join_doubles(spec.beta) << "\n";
    os << "delta = " << detail::join_doubles(spec.delta) << "\n";
    os << "tau = " << spec.tau << "\n";
    os << "errors.process = " << process_name(spec.errors.process) << "\n";
    os << "errors.innovation = " << innovation_name(spec.errors.innovation) << "\n";
    os << "errors.sigma = " << spec.errors.sigma << "\n";
    if (spec.sigma_matrix.dim() == 0) {
        os << "sigma_matrix = identity\n";
    } else {
        std::vector<double> flat;
        for (std::size_t i = 0; i < spec.sigma_matrix.dim(); ++i)
            for (std::size_t j = 0; j < spec.sigma_matrix.dim(); ++j)
                flat.push_back(spec.sigma_matrix(i, j));
        os << "sigma_matrix = " << detail::join_doubles(flat) << "\n";
    }
    os << "seed = " << spec.seed << "\n";
    return os.str();
}

inline ScenarioSpec parse_scenario(const std::string& text) {
    std::map<std::string, std::string> kv;
    std::istringstream is(text);
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(is, line)) {
        ++lineno;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        const auto eq = line.find('=');
        if (eq == std::string::npos) {
            if (line.find_first_not_of(" \t\r") != std::string::npos)
                throw ParseError("scenario line " + std::to_string(lineno) + ": expected key = value");
            continue;
        }
        auto trim = [](std::string s) {
            const auto b = s.find_first_not_of(" \t\r");
            const auto e = s.find_last_not_of(" \t\r");
            return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
        };
        kv[trim(line.substr(0, eq))] = trim(line.substr(eq + 1));
    }
    auto need = [&](const std::string& key) {
        const auto it = kv.find(key);
        if (it == kv.end()) throw ParseError("scenario: missing key " + key);
        return it->second;
    };

    ScenarioSpec spec;
    spec.design.kind = design_kind_from(need("design.kind"));
    spec.design.n = static_cast<std::size_t>(std::stoull(need("design.n")));
    spec.design.p = static_cast<std::size_t>(std::stoull(need("design.p")));
    spec.design.scale = std::stod(need("design.scale"));
    spec.beta = detail::split_doubles(need("beta"));
    spec.delta = detail::split_doubles(need("delta"));
    spec.tau = static_cast<std::size_t>(std::stoull(need("tau")));
    spec.errors.process = process_from(need("errors.process"));
    spec.errors.innovation = innovation_from(need("errors.innovation"));
    spec.errors.sigma = std::stod(need("errors.sigma"));
    const std::string sm = need("sigma_matrix");
    if (sm != "identity") {
        const auto flat = detail::split_doubles(sm);
        const auto dim = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(flat.size()))));
        if (dim * dim != flat.size())
            throw ParseError("scenario: sigma_matrix is not a square matrix");
        Matrix m(dim, dim);
        for (std::size_t i = 0; i < dim; ++i)
            for (std::size_t j = 0; j < dim; ++j) m(i, j) = flat[i * dim + j];
        spec.sigma_matrix = SymMatrix::from_dense(m, 1e-12);
    }
    spec.seed = std::stoull(need("seed"));
    return spec;
}

} // namespace eivcp
