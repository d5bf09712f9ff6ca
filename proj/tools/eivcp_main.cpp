#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "eivcp/eivcp.hpp"

namespace {

struct CommonOpts {
    std::string data;
    std::string sigma;
    std::string table;
    std::string out;
    std::string exact_cols;
    std::string stat = "both";
    double alpha = 0.05;
    std::uint64_t seed = 42;
    std::size_t grid_points = 1000;
    std::size_t reps = 100000;
    bool rescale = false;
};

eivcp::RunConfig to_config(const CommonOpts& o) {
    eivcp::RunConfig cfg;
    cfg.data_path = o.data;
    if (!o.sigma.empty()) cfg.sigma_path = o.sigma;
    if (!o.table.empty()) cfg.table_path = o.table;
    if (!o.out.empty()) cfg.output_path = o.out;
    cfg.alpha = o.alpha;
    cfg.statistic = o.stat;
    cfg.seed = o.seed;
    cfg.grid_points = o.grid_points;
    cfg.reps = o.reps;
    cfg.rescale = o.rescale;
    if (!o.exact_cols.empty()) {
        std::string cur;
        for (char c : o.exact_cols + ",") {
            if (c == ',') {
                if (!cur.empty()) cfg.exact_regressor_columns.push_back(cur);
                cur.clear();
            } else {
                cur += c;
            }
        }
    }
    return cfg;
}

void emit(const std::string& text, const std::string& out_path) {
    if (out_path.empty()) {
        std::cout << text;
        return;
    }
    std::ofstream out(out_path);
    if (!out) throw eivcp::ParseError("cannot write output file: " + out_path);
    out << text;
    std::cout << "wrote " << out_path << "\n";
}

void add_data_opts(CLI::App* cmd, CommonOpts& o, bool need_data) {
    auto* d = cmd->add_option("--data", o.data, "input CSV (header x1..xp then y)");
    if (need_data) d->required();
    cmd->add_option("--sigma", o.sigma, "error covariance CSV (default: identity)");
    cmd->add_option("--table", o.table, "quantile table file from 'critvals'");
    cmd->add_option("--alpha", o.alpha, "significance level")->check(CLI::Range(1e-9, 0.999999));
    cmd->add_option("--stat", o.stat, "statistic: sup, int, or both")
        ->check(CLI::IsMember({"sup", "int", "both"}));
    cmd->add_option("--exact-cols", o.exact_cols,
                    "comma list of exact-regressor columns; 'intercept' adds a ones column");
    cmd->add_flag("--rescale", o.rescale, "apply the randomly-spaced-series rescaling");
    cmd->add_option("--out", o.out, "write the report here instead of stdout");
    cmd->add_option("--seed", o.seed, "RNG seed");
    cmd->add_option("--grid-points", o.grid_points, "Wiener grid points for simulation");
    cmd->add_option("--reps", o.reps, "Monte Carlo replications");
}

int cmd_detect(const CommonOpts& o, bool estimate_only) {
    const eivcp::DetectReport rep = eivcp::run_detect(to_config(o));
    if (estimate_only) {
        std::ostringstream os;
        os << "changepoint estimate (row index): " << rep.result.tau_hat << "\n";
        emit(os.str(), o.out);
    } else {
        emit(rep.text, o.out);
    }
    return 0;
}

int cmd_critvals(const CommonOpts& o, bool no_draws) {
    eivcp::RunConfig cfg = to_config(o);
    const auto rep = eivcp::run_critvals(cfg, !no_draws);
    std::cout << rep.text;
    if (!o.out.empty()) {
        eivcp::save_quantile_table_file(o.out, rep.table);
        std::cout << "wrote " << o.out << "\n";
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"changepoint tests for errors-in-variables linear relations"};
    app.require_subcommand(1);

    CommonOpts detect_opts, estimate_opts, critvals_opts, simulate_opts, experiment_opts;

    auto* detect = app.add_subcommand("detect", "run both changepoint tests on a CSV dataset");
    add_data_opts(detect, detect_opts, true);

    auto* estimate = app.add_subcommand("estimate", "estimate the changepoint location only");
    add_data_opts(estimate, estimate_opts, true);

    auto* critvals =
        app.add_subcommand("critvals", "regenerate asymptotic critical values by simulation");
    bool no_draws = false;
    critvals->add_option("--seed", critvals_opts.seed, "RNG seed");
    critvals->add_option("--grid-points", critvals_opts.grid_points, "Wiener grid points");
    critvals->add_option("--reps", critvals_opts.reps, "simulation replications");
    critvals->add_option("--out", critvals_opts.out, "table file to write");
    critvals->add_flag("--no-draws", no_draws, "do not store the draw pools in the table file");

    auto* simulate = app.add_subcommand("simulate", "generate a synthetic dataset from a scenario");
    std::string scenario_path, truth_out;
    simulate->add_option("--scenario", scenario_path, "scenario configuration file")->required();
    simulate->add_option("--out", simulate_opts.out, "CSV output path (default: stdout)");
    simulate->add_option("--truth-out", truth_out, "write the generating truth (Z, tau, ...) here");
    simulate->add_option("--seed", simulate_opts.seed,
                         "override the seed recorded in the scenario");
    bool seed_given = false;
    simulate->callback([&] { seed_given = simulate->count("--seed") > 0; });

    auto* experiment =
        app.add_subcommand("experiment", "size/power grid with estimator summaries");
    std::string n_list = "200,1000", delta_list = "0,0.1,0.5", sigma_list = "0.5,1",
                proc_list = "IID,AR1,ARCH1", innov_list = "standard-normal,student-t3",
                tau_list = "0.25,0.5";
    std::size_t exp_p = 1, exp_reps = 2000;
    experiment->add_option("--n-list", n_list, "comma list of sample sizes");
    experiment->add_option("--tau-fracs", tau_list, "comma list of changepoint fractions");
    experiment->add_option("--delta-list", delta_list, "comma list of change sizes (0 = null)");
    experiment->add_option("--sigma-list", sigma_list, "comma list of error SDs");
    experiment->add_option("--process-list", proc_list, "comma list of IID,AR1,ARCH1");
    experiment->add_option("--innovation-list", innov_list,
                           "comma list of standard-normal,student-t3");
    experiment->add_option("--p", exp_p, "covariate dimension (1 or 2)")
        ->check(CLI::IsMember({1, 2}));
    experiment->add_option("--reps", exp_reps, "replicates per cell");
    experiment->add_option("--seed", experiment_opts.seed, "RNG seed");
    experiment->add_option("--out", experiment_opts.out,
                           "output prefix; writes <prefix>.txt, <prefix>_cells.csv, "
                           "<prefix>_sizepower.csv");

    CLI11_PARSE(app, argc, argv);

    try {
        if (detect->parsed()) return cmd_detect(detect_opts, false);
        if (estimate->parsed()) return cmd_detect(estimate_opts, true);
        if (critvals->parsed()) return cmd_critvals(critvals_opts, no_draws);

        if (simulate->parsed()) {
            std::ifstream in(scenario_path);
            if (!in) throw eivcp::ParseError("cannot open scenario: " + scenario_path);
            std::ostringstream buf;
            buf << in.rdbuf();
            eivcp::ScenarioSpec spec = eivcp::parse_scenario(buf.str());
            if (seed_given) spec.seed = simulate_opts.seed;
            auto [ds, truth] = eivcp::gen_dataset(spec);
            std::ostringstream data_os;
            eivcp::write_dataset_csv(data_os, ds);
            emit(data_os.str(), simulate_opts.out);
            if (!truth_out.empty()) {
                std::ofstream t(truth_out);
                if (!t) throw eivcp::ParseError("cannot write truth file: " + truth_out);
                t << "tau = " << truth.tau << "\n";
                t << "beta = " << eivcp::detail::join_doubles(truth.beta) << "\n";
                t << "delta = " << eivcp::detail::join_doubles(truth.delta) << "\n";
            }
            return 0;
        }

        if (experiment->parsed()) {
            auto parse_doubles = [](const std::string& s) { return eivcp::detail::split_doubles(s); };
            auto parse_sizes = [&](const std::string& s) {
                std::vector<std::size_t> out;
                for (double v : parse_doubles(s)) out.push_back(static_cast<std::size_t>(v));
                return out;
            };
            eivcp::ExperimentGrid grid;
            grid.n_values = parse_sizes(n_list);
            grid.tau_fractions = parse_doubles(tau_list);
            grid.delta_values = parse_doubles(delta_list);
            grid.sigma_values = parse_doubles(sigma_list);
            grid.processes.clear();
            {
                std::istringstream is(proc_list);
                std::string tok;
                while (std::getline(is, tok, ','))
                    if (!tok.empty()) grid.processes.push_back(eivcp::process_from(tok));
            }
            grid.innovations.clear();
            {
                std::istringstream is(innov_list);
                std::string tok;
                while (std::getline(is, tok, ','))
                    if (!tok.empty()) grid.innovations.push_back(eivcp::innovation_from(tok));
            }
            grid.p = exp_p;
            grid.reps = exp_reps;
            grid.seed = experiment_opts.seed;

            const eivcp::ExperimentReport report = eivcp::run_experiment(grid);
            if (experiment_opts.out.empty()) {
                std::cout << report.text;
            } else {
                emit(report.text, experiment_opts.out + ".txt");
                std::ofstream cells(experiment_opts.out + "_cells.csv");
                eivcp::write_experiment_csv(cells, report);
                std::ofstream sp(experiment_opts.out + "_sizepower.csv");
                eivcp::write_sizepower_csv(sp, report);
                std::cout << "wrote " << experiment_opts.out << "_cells.csv and _sizepower.csv\n";
            }
            return 0;
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
