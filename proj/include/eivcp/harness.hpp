#pragma once

// Run orchestration behind the CLI: detection runs on CSV data, critical
// value regeneration, and the size/power experiment grid with changepoint
// estimator summaries.

#include <algorithm>
#include <cstdio>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eivcp/datagen.hpp"
#include "eivcp/detect.hpp"
#include "eivcp/errors.hpp"
#include "eivcp/io.hpp"
#include "eivcp/limit_sim.hpp"
#include "eivcp/model.hpp"
#include "eivcp/parallel.hpp"
#include "eivcp/spectral.hpp"

namespace eivcp {

struct RunConfig {
    std::string data_path;
    std::optional<std::string> sigma_path;
    std::optional<std::string> table_path; // cached quantile table with draws
    double alpha = 0.05;
    std::string statistic = "both"; // sup | int | both
    std::uint64_t seed = 42;
    std::size_t grid_points = 1000;
    std::size_t reps = 100000;
    std::optional<std::string> output_path;
    std::vector<std::string> exact_regressor_columns; // header names; "intercept" = ones
    bool rescale = false;
};

namespace detail {

inline std::string fmt(const char* spec, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, spec, v);
    return buf;
}

} // namespace detail

/// Loads the dataset plus optional exact-regressor columns named in the
/// config ("intercept" synthesizes a ones column).
inline std::pair<Dataset, std::optional<ExactRegressors>> load_run_inputs(const RunConfig& cfg) {
    const CsvTable table = parse_data_csv_file(cfg.data_path);
    const DataLayout layout = detect_layout(table.headers);
    const std::size_t n = table.values.rows();
    const std::size_t p = layout.x_cols.size(), q = layout.y_cols.size();

    Matrix x(n, p), y(n, q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = table.values(i, layout.x_cols[j]);
        for (std::size_t j = 0; j < q; ++j) y(i, j) = table.values(i, layout.y_cols[j]);
    }
    SymMatrix sigma =
        cfg.sigma_path ? read_sigma_csv(*cfg.sigma_path) : SymMatrix::identity(p + q);
    if (sigma.dim() != p + q)
        throw InvalidArgument("sigma dimension does not match p+q");
    Dataset ds(std::move(x), std::move(y), std::move(sigma));

    std::optional<ExactRegressors> exact;
    if (!cfg.exact_regressor_columns.empty()) {
        Matrix w(n, cfg.exact_regressor_columns.size());
        for (std::size_t c = 0; c < cfg.exact_regressor_columns.size(); ++c) {
            const std::string& name = cfg.exact_regressor_columns[c];
            if (name == "intercept" || name == "const" || name == "1") {
                for (std::size_t i = 0; i < n; ++i) w(i, c) = 1.0;
                continue;
            }
            bool found = false;
            for (std::size_t h = 0; h < table.headers.size(); ++h) {
                if (table.headers[h] == name) {
                    for (std::size_t i = 0; i < n; ++i) w(i, c) = table.values(i, h);
                    found = true;
                    break;
                }
            }
            if (!found) throw InvalidArgument("exact regressor column not found: " + name);
        }
        exact = ExactRegressors{std::move(w)};
    }
    return {std::move(ds), std::move(exact)};
}

struct DetectReport {
    TestResult result;
    std::size_t n = 0, p = 0, q = 0;
    bool sigma_defaulted = false;
    std::string table_provenance;
    std::string text; // deterministic, embeds the full configuration
};

/// detect/estimate pipeline: optional projection of exact regressors,
/// optional rescaling, lambda sweep, then the tests.
inline DetectReport run_detect(const RunConfig& cfg) {
    auto [ds, exact] = load_run_inputs(cfg);
    const bool sigma_defaulted = !cfg.sigma_path.has_value();
    Dataset work = std::move(ds);
    if (exact) work = project_out(work, *exact);
    if (cfg.rescale) work = rescale_random_spacing(work);

    const LambdaSequences seqs = lambda_sequences(work);
    const QuantileTable table = cfg.table_path ? load_quantile_table_file(*cfg.table_path)
                                               : QuantileTable::embedded_table1();
    DetectReport rep;
    rep.result = decide(seqs, table, cfg.alpha);
    rep.n = work.n();
    rep.p = work.p();
    rep.q = work.q();
    rep.sigma_defaulted = sigma_defaulted;
    rep.table_provenance = cfg.table_path
                               ? ("file " + *cfg.table_path + " (m=" + std::to_string(table.grid_points) +
                                  ", reps=" + std::to_string(table.replications) + ")")
                               : "embedded published critical values";

    std::ostringstream os;
    os << "eivcp detect report\n";
    os << "data: " << cfg.data_path << "\n";
    os << "sigma: " << (cfg.sigma_path ? *cfg.sigma_path : "identity (defaulted; note logged)")
       << "\n";
    os << "n: " << rep.n << "  p: " << rep.p << "  q: " << rep.q << "\n";
    if (exact)
        os << "exact regressors projected out: " << cfg.exact_regressor_columns.size()
           << " column(s)\n";
    os << "rescale: " << (cfg.rescale ? "yes" : "no") << "\n";
    os << "alpha: " << detail::fmt("%.6g", cfg.alpha) << "\n";
    os << "seed: " << cfg.seed << "  grid_points: " << cfg.grid_points
       << "  reps: " << cfg.reps << "\n";
    os << "critical values: " << rep.table_provenance << "\n";
    const bool want_sup = cfg.statistic == "sup" || cfg.statistic == "both";
    const bool want_int = cfg.statistic == "int" || cfg.statistic == "both";
    if (want_sup) {
        os << "sup statistic: " << detail::fmt("%.6f", rep.result.stat_sup)
           << "  p-value: " << detail::fmt("%.6g", rep.result.p_sup)
           << (rep.result.p_from_draws ? " (empirical)" : " (interpolated from quantiles)")
           << "  decision: " << (rep.result.reject_sup ? "reject H0" : "no rejection") << "\n";
    }
    if (want_int) {
        os << "int statistic: " << detail::fmt("%.6f", rep.result.stat_int)
           << "  p-value: " << detail::fmt("%.6g", rep.result.p_int)
           << (rep.result.p_from_draws ? " (empirical)" : " (interpolated from quantiles)")
           << "  decision: " << (rep.result.reject_int ? "reject H0" : "no rejection") << "\n";
    }
    os << "changepoint estimate (row index): " << rep.result.tau_hat << "\n";
    if (rep.result.degenerate_ratio)
        os << "warning: degenerate zero-denominator ratio encountered\n";
    rep.text = os.str();
    return rep;
}

/// critvals: regenerates the asymptotic quantiles and reports the gap to
/// the published table.
struct CritvalsReport {
    QuantileTable table;
    std::string text;
};

inline CritvalsReport run_critvals(const RunConfig& cfg, bool keep_draws = true) {
    CritvalsReport rep;
    rep.table = simulate_quantiles(cfg.grid_points, cfg.reps, default_levels(), cfg.seed,
                                   keep_draws);
    const QuantileTable ref = QuantileTable::embedded_table1();
    std::ostringstream os;
    os << "eivcp critical values (m=" << cfg.grid_points << ", reps=" << cfg.reps
       << ", seed=" << cfg.seed << ")\n";
    if (rep.table.low_precision())
        os << "warning: low-precision table (reps < 10000)\n";
    os << "level     sup_sim    sup_published  diff       int_sim    int_published  diff\n";
    for (std::size_t i = 0; i < ref.levels.size(); ++i) {
        os << detail::fmt("%.3f", ref.levels[i]) << "     ";
        os << detail::fmt("%9.6f", rep.table.quantiles_sup[i]) << "  ";
        os << detail::fmt("%9.6f", ref.quantiles_sup[i]) << "     ";
        os << detail::fmt("%+8.5f", rep.table.quantiles_sup[i] - ref.quantiles_sup[i]) << "  ";
        os << detail::fmt("%9.6f", rep.table.quantiles_int[i]) << "  ";
        os << detail::fmt("%9.6f", ref.quantiles_int[i]) << "     ";
        os << detail::fmt("%+8.5f", rep.table.quantiles_int[i] - ref.quantiles_int[i]) << "\n";
    }
    rep.text = os.str();
    return rep;
}

// --- experiment grid ---------------------------------------------------------

struct ExperimentGrid {
    std::vector<std::size_t> n_values{200, 1000};
    std::vector<double> tau_fractions{0.25, 0.5};
    std::vector<double> delta_values{0.0, 0.1, 0.5}; // 0 = null hypothesis
    std::vector<double> sigma_values{0.5, 1.0};
    std::vector<ErrorProcess> processes{ErrorProcess::IID, ErrorProcess::AR1,
                                        ErrorProcess::ARCH1};
    std::vector<Innovation> innovations{Innovation::Normal, Innovation::StudentT3};
    std::size_t p = 1; // 1 (equidistant) or 2 (power curve)
    std::size_t reps = 2000;
    std::uint64_t seed = 42;
    std::vector<double> alphas{0.01, 0.05, 0.10};
};

struct CellResult {
    std::size_t n = 0;
    double tau_fraction = 0.0; // 0 under H0
    std::size_t tau = 0;
    double delta = 0.0;
    double sigma = 1.0;
    ErrorProcess process = ErrorProcess::IID;
    Innovation innovation = Innovation::Normal;
    std::size_t reps = 0;
    std::map<double, double> reject_sup; // alpha -> empirical rejection rate
    std::map<double, double> reject_int;
    double tau_q1 = 0.0, tau_median = 0.0, tau_q3 = 0.0;
    double tau_abs_dev_median = 0.0; // median |tau_hat - tau| (HA cells)
    std::string error;               // non-empty if the cell failed
};

struct ExperimentReport {
    ExperimentGrid grid;
    std::vector<CellResult> cells;
    std::string text;
};

namespace detail {

inline double quantile_sorted(const std::vector<double>& sorted, double level) {
    if (sorted.empty()) return 0.0;
    const double h = level * static_cast<double>(sorted.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= sorted.size()) return sorted.back();
    return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[lo + 1] - sorted[lo]);
}

} // namespace detail

/// Runs one cell: `reps` replicates, each from its own substream, with
/// rejection rates against the embedded critical values.
inline CellResult run_cell(const ExperimentGrid& grid, std::size_t cell_id,
                           std::size_t n, double tau_fraction, double delta, double sigma,
                           ErrorProcess process, Innovation innovation) {
    CellResult cell;
    cell.n = n;
    cell.tau_fraction = tau_fraction;
    cell.tau = tau_fraction > 0.0
                   ? static_cast<std::size_t>(static_cast<double>(n) * tau_fraction)
                   : 0;
    cell.delta = delta;
    cell.sigma = sigma;
    cell.process = process;
    cell.innovation = innovation;
    cell.reps = grid.reps;

    const QuantileTable table = QuantileTable::embedded_table1();

    std::vector<double> sup_vals(grid.reps), int_vals(grid.reps);
    std::vector<double> tau_hats(grid.reps);
    std::vector<std::string> errors(grid.reps);

    parallel_for(grid.reps, [&](std::size_t r) {
        try {
            ScenarioSpec spec;
            spec.design = grid.p == 1 ? DesignSpec::equidistant(n) : DesignSpec::power_curve(n);
            spec.beta.assign(grid.p, 1.0);
            spec.delta.assign(grid.p, delta);
            spec.tau = cell.tau;
            spec.errors = ErrorProcessSpec{process, innovation, sigma};
            spec.seed = substream_seed(grid.seed, cell_id, r);
            auto [ds, truth] = gen_dataset(spec);
            const LambdaSequences seqs = lambda_sequences(ds);
            const auto stats = self_normalized_stats(seqs.prefix, seqs.suffix, seqs.n);
            sup_vals[r] = stats.sup;
            int_vals[r] = stats.integral;
            tau_hats[r] = static_cast<double>(estimate_changepoint(seqs));
        } catch (const std::exception& e) {
            errors[r] = e.what();
        }
    });

    for (const auto& e : errors) {
        if (!e.empty()) {
            cell.error = e;
            return cell;
        }
    }

    for (double alpha : grid.alphas) {
        const double crit_sup = table.critical_value(StatKind::Sup, alpha);
        const double crit_int = table.critical_value(StatKind::Integral, alpha);
        std::size_t rej_sup = 0, rej_int = 0;
        for (std::size_t r = 0; r < grid.reps; ++r) {
            if (sup_vals[r] > crit_sup) ++rej_sup;
            if (int_vals[r] > crit_int) ++rej_int;
        }
        cell.reject_sup[alpha] = static_cast<double>(rej_sup) / static_cast<double>(grid.reps);
        cell.reject_int[alpha] = static_cast<double>(rej_int) / static_cast<double>(grid.reps);
    }

    std::sort(tau_hats.begin(), tau_hats.end());
    cell.tau_q1 = detail::quantile_sorted(tau_hats, 0.25);
    cell.tau_median = detail::quantile_sorted(tau_hats, 0.5);
    cell.tau_q3 = detail::quantile_sorted(tau_hats, 0.75);
    if (cell.tau > 0) {
        std::vector<double> dev(grid.reps);
        for (std::size_t r = 0; r < grid.reps; ++r)
            dev[r] = std::abs(tau_hats[r] - static_cast<double>(cell.tau));
        std::sort(dev.begin(), dev.end());
        cell.tau_abs_dev_median = detail::quantile_sorted(dev, 0.5);
    }
    return cell;
}

inline ExperimentReport run_experiment(const ExperimentGrid& grid) {
    ExperimentReport report;
    report.grid = grid;

    std::size_t cell_id = 0;
    for (std::size_t n : grid.n_values) {
        for (double delta : grid.delta_values) {
            // Under H0 the changepoint location is meaningless: one cell.
            const std::vector<double> taus =
                delta == 0.0 ? std::vector<double>{0.0} : grid.tau_fractions;
            for (double tf : taus) {
                for (double sigma : grid.sigma_values) {
                    for (ErrorProcess pr : grid.processes) {
                        for (Innovation in : grid.innovations) {
                            report.cells.push_back(
                                run_cell(grid, cell_id++, n, tf, delta, sigma, pr, in));
                        }
                    }
                }
            }
        }
    }

    std::ostringstream os;
    os << "eivcp experiment report (p=" << grid.p << ", reps=" << grid.reps
       << ", seed=" << grid.seed << ")\n";
    if (report.cells.empty()) {
        os << "warning: empty grid, nothing to do\n";
    }
    os << "n     delta  tau    sigma  process innov ";
    for (double a : grid.alphas) os << " sup@" << detail::fmt("%.2f", a);
    for (double a : grid.alphas) os << " int@" << detail::fmt("%.2f", a);
    os << "  tau_q1 tau_med tau_q3 med|dev|\n";
    for (const auto& c : report.cells) {
        if (!c.error.empty()) {
            os << "cell failed (n=" << c.n << ", delta=" << c.delta << "): " << c.error << "\n";
            continue;
        }
        char line[160];
        std::snprintf(line, sizeof line, "%-5zu %-6.2f %-6zu %-6.2f %-7s %-5s ", c.n, c.delta,
                      c.tau, c.sigma, process_name(c.process).c_str(),
                      c.innovation == Innovation::Normal ? "N01" : "t3");
        os << line;
        for (double a : grid.alphas) os << detail::fmt(" %8.4f", c.reject_sup.at(a));
        for (double a : grid.alphas) os << detail::fmt(" %8.4f", c.reject_int.at(a));
        std::snprintf(line, sizeof line, "  %6.1f %7.1f %6.1f %8.1f\n", c.tau_q1, c.tau_median,
                      c.tau_q3, c.tau_abs_dev_median);
        os << line;
    }
    report.text = os.str();
    return report;
}

/// Machine-readable per-cell table.
inline void write_experiment_csv(std::ostream& out, const ExperimentReport& report) {
    out << "n,delta,tau,sigma,process,innovation,reps";
    for (double a : report.grid.alphas) out << ",reject_sup_" << detail::fmt("%.2f", a);
    for (double a : report.grid.alphas) out << ",reject_int_" << detail::fmt("%.2f", a);
    out << ",tau_q1,tau_median,tau_q3,tau_abs_dev_median,error\n";
    for (const auto& c : report.cells) {
        out << c.n << "," << detail::fmt("%.17g", c.delta) << "," << c.tau << ","
            << detail::fmt("%.17g", c.sigma) << "," << process_name(c.process) << ","
            << innovation_name(c.innovation) << "," << c.reps;
        for (double a : report.grid.alphas)
            out << "," << (c.error.empty() ? detail::fmt("%.6f", c.reject_sup.at(a)) : "");
        for (double a : report.grid.alphas)
            out << "," << (c.error.empty() ? detail::fmt("%.6f", c.reject_int.at(a)) : "");
        out << "," << detail::fmt("%.3f", c.tau_q1) << "," << detail::fmt("%.3f", c.tau_median)
            << "," << detail::fmt("%.3f", c.tau_q3) << ","
            << detail::fmt("%.3f", c.tau_abs_dev_median) << "," << c.error << "\n";
    }
}

/// Plot-ready size-power table: empirical rejection against nominal level,
/// one row per (cell, statistic, alpha).
inline void write_sizepower_csv(std::ostream& out, const ExperimentReport& report) {
    out << "n,delta,tau,sigma,process,innovation,statistic,theoretical_level,"
           "empirical_rejection\n";
    for (const auto& c : report.cells) {
        if (!c.error.empty()) continue;
        for (const auto& [alpha, rate] : c.reject_sup) {
            out << c.n << "," << detail::fmt("%.17g", c.delta) << "," << c.tau << ","
                << detail::fmt("%.17g", c.sigma) << "," << process_name(c.process) << ","
                << innovation_name(c.innovation) << ",sup," << detail::fmt("%.4f", alpha) << ","
                << detail::fmt("%.6f", rate) << "\n";
        }
        for (const auto& [alpha, rate] : c.reject_int) {
            out << c.n << "," << detail::fmt("%.17g", c.delta) << "," << c.tau << ","
                << detail::fmt("%.17g", c.sigma) << "," << process_name(c.process) << ","
                << innovation_name(c.innovation) << ",int," << detail::fmt("%.4f", alpha) << ","
                << detail::fmt("%.6f", rate) << "\n";
        }
    }
}

} // namespace eivcp
