#pragma once

// File formats: data CSV (header x1..xp then y or y1..yq, extra columns
// allowed for exact regressors), sigma CSV (square numeric matrix, no
// header), and the versioned quantile-table cache.

#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "eivcp/detect.hpp"
#include "eivcp/errors.hpp"
#include "eivcp/linalg.hpp"
#include "eivcp/model.hpp"

namespace eivcp {

/// Raw parsed CSV: column names plus numeric cells.
struct CsvTable {
    std::vector<std::string> headers;
    Matrix values; // n x headers.size()
};

namespace detail {

inline std::string trim_ws(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    const auto e = s.find_last_not_of(" \t\r\n");
    return b == std::string::npos ? std::string{} : s.substr(b, e - b + 1);
}

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> cells;
    std::string cur;
    std::istringstream is(line);
    while (std::getline(is, cur, ',')) cells.push_back(trim_ws(cur));
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

inline double parse_cell(const std::string& cell, std::size_t row, std::size_t col) {
    const std::string loc =
        "row " + std::to_string(row) + ", column " + std::to_string(col + 1);
    if (cell.empty()) throw ParseError("empty cell at " + loc);
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(cell, &pos);
    } catch (const std::exception&) {
        throw ParseError("non-numeric cell '" + cell + "' at " + loc);
    }
    if (pos != cell.size()) throw ParseError("trailing junk in cell '" + cell + "' at " + loc);
    if (!std::isfinite(v)) throw ParseError("non-finite value '" + cell + "' at " + loc);
    return v;
}

} // namespace detail

/// Parses a CSV with a header row; every data cell must be finite numeric.
/// Errors carry 1-based data row numbers (header excluded).
inline CsvTable parse_data_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw ParseError("empty file");
    CsvTable table;
    table.headers = detail::split_csv_line(line);
    if (table.headers.empty()) throw ParseError("empty header row");

    std::vector<std::vector<double>> rows;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
        if (detail::trim_ws(line).empty()) continue;
        ++rowno;
        const auto cells = detail::split_csv_line(line);
        if (cells.size() != table.headers.size())
            throw ParseError("row " + std::to_string(rowno) + " has " +
                             std::to_string(cells.size()) + " cells, expected " +
                             std::to_string(table.headers.size()));
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = detail::parse_cell(cells[c], rowno, c);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError("no data rows");
    table.values = Matrix(rows.size(), table.headers.size());
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c) table.values(r, c) = rows[r][c];
    return table;
}

inline CsvTable parse_data_csv_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open data file: " + path);
    try {
        return parse_data_csv(in);
    } catch (const ParseError& e) {
        throw ParseError(path + ": " + e.what());
    }
}

/// Square numeric CSV without header; validated near-symmetric, then
/// symmetrized exactly and checked positive definite.
inline SymMatrix read_sigma_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open sigma file: " + path);
    std::vector<std::vector<double>> rows;
    std::string line;
    std::size_t rowno = 0;
    while (std::getline(in, line)) {
        if (detail::trim_ws(line).empty()) continue;
        ++rowno;
        const auto cells = detail::split_csv_line(line);
        std::vector<double> row(cells.size());
        for (std::size_t c = 0; c < cells.size(); ++c)
            row[c] = detail::parse_cell(cells[c], rowno, c);
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw ParseError(path + ": empty sigma file");
    const std::size_t dim = rows.size();
    Matrix m(dim, dim);
    for (std::size_t r = 0; r < dim; ++r) {
        if (rows[r].size() != dim)
            throw ParseError(path + ": sigma row " + std::to_string(r + 1) + " has " +
                             std::to_string(rows[r].size()) + " cells, expected " +
                             std::to_string(dim));
        for (std::size_t c = 0; c < dim; ++c) m(r, c) = rows[r][c];
    }
    SymMatrix sigma = SymMatrix::from_dense(m, 1e-9);
    if (smallest_eigenvalue(sigma) <= 0.0)
        throw NotPositiveDefinite(path + ": sigma is not positive definite");
    return sigma;
}

/// Model columns are x1..xp followed by y (or y1..yq); other columns are
/// ignored here and may serve as exact regressors.
struct DataLayout {
    std::vector<std::size_t> x_cols;
    std::vector<std::size_t> y_cols;
};

inline DataLayout detect_layout(const std::vector<std::string>& headers) {
    DataLayout layout;
    auto find = [&](const std::string& name) -> std::optional<std::size_t> {
        for (std::size_t i = 0; i < headers.size(); ++i)
            if (headers[i] == name) return i;
        return std::nullopt;
    };
    for (std::size_t j = 1;; ++j) {
        const auto col = find("x" + std::to_string(j));
        if (!col) break;
        layout.x_cols.push_back(*col);
    }
    if (layout.x_cols.empty()) throw ParseError("no x1..xp columns in header");
    if (const auto y = find("y")) {
        layout.y_cols.push_back(*y);
    } else {
        for (std::size_t j = 1;; ++j) {
            const auto col = find("y" + std::to_string(j));
            if (!col) break;
            layout.y_cols.push_back(*col);
        }
    }
    if (layout.y_cols.empty()) throw ParseError("no y (or y1..yq) column in header");
    return layout;
}

/// Loads a dataset; a missing sigma path means identity (the caller may
/// log that). Throws with row/column positions on malformed input.
inline Dataset ingest_csv(const std::string& data_path,
                          const std::optional<std::string>& sigma_path = std::nullopt) {
    const CsvTable table = parse_data_csv_file(data_path);
    const DataLayout layout = detect_layout(table.headers);
    const std::size_t n = table.values.rows();
    const std::size_t p = layout.x_cols.size(), q = layout.y_cols.size();

    Matrix x(n, p), y(n, q);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < p; ++j) x(i, j) = table.values(i, layout.x_cols[j]);
        for (std::size_t j = 0; j < q; ++j) y(i, j) = table.values(i, layout.y_cols[j]);
    }
    SymMatrix sigma = sigma_path ? read_sigma_csv(*sigma_path) : SymMatrix::identity(p + q);
    if (sigma.dim() != p + q)
        throw InvalidArgument("sigma dimension " + std::to_string(sigma.dim()) +
                              " does not match p+q = " + std::to_string(p + q));
    return Dataset(std::move(x), std::move(y), std::move(sigma));
}

inline void write_dataset_csv(std::ostream& out, const Dataset& ds) {
    for (std::size_t j = 1; j <= ds.p(); ++j) out << "x" << j << ",";
    if (ds.q() == 1) {
        out << "y\n";
    } else {
        for (std::size_t j = 1; j <= ds.q(); ++j) out << "y" << j << (j == ds.q() ? '\n' : ',');
    }
    char buf[64];
    for (std::size_t i = 0; i < ds.n(); ++i) {
        for (std::size_t j = 0; j < ds.p(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.x()(i, j));
            out << buf << ",";
        }
        for (std::size_t j = 0; j < ds.q(); ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", ds.y()(i, j));
            out << buf << (j + 1 == ds.q() ? '\n' : ',');
        }
    }
}

// --- quantile table cache ---------------------------------------------------

/// Versioned plain-text format:
///   eivcp-quantile-table v1
///   m <grid points>, reps <count>, seed <seed>
///   level sup_quantile int_quantile rows, then optional draw sections.
inline void save_quantile_table(std::ostream& out, const QuantileTable& table) {
    char buf[64];
    out << "eivcp-quantile-table v1\n";
    out << "m " << table.grid_points << "\n";
    out << "reps " << table.replications << "\n";
    out << "seed " << table.seed << "\n";
    out << "levels " << table.levels.size() << "\n";
    for (std::size_t i = 0; i < table.levels.size(); ++i) {
        std::snprintf(buf, sizeof buf, "%.6f", table.levels[i]);
        out << buf;
        std::snprintf(buf, sizeof buf, " %.17g", table.quantiles_sup[i]);
        out << buf;
        std::snprintf(buf, sizeof buf, " %.17g", table.quantiles_int[i]);
        out << buf << "\n";
    }
    auto dump = [&](const char* name, const std::vector<double>& v) {
        out << name << " " << v.size() << "\n";
        for (double d : v) {
            std::snprintf(buf, sizeof buf, "%.17g\n", d);
            out << buf;
        }
    };
    if (table.has_draws()) {
        dump("draws_sup", table.sorted_draws_sup);
        dump("draws_int", table.sorted_draws_int);
    }
}

inline void save_quantile_table_file(const std::string& path, const QuantileTable& table) {
    std::ofstream out(path);
    if (!out) throw ParseError("cannot write quantile table: " + path);
    save_quantile_table(out, table);
}

inline QuantileTable load_quantile_table(std::istream& in) {
    std::string tag, version;
    in >> tag >> version;
    if (tag != "eivcp-quantile-table" || version != "v1")
        throw ParseError("not a v1 quantile table file");
    QuantileTable table;
    std::string key;
    std::size_t count = 0;
    in >> key >> table.grid_points;
    if (key != "m") throw ParseError("quantile table: expected 'm'");
    in >> key >> table.replications;
    if (key != "reps") throw ParseError("quantile table: expected 'reps'");
    in >> key >> table.seed;
    if (key != "seed") throw ParseError("quantile table: expected 'seed'");
    in >> key >> count;
    if (key != "levels") throw ParseError("quantile table: expected 'levels'");
    table.levels.resize(count);
    table.quantiles_sup.resize(count);
    table.quantiles_int.resize(count);
    for (std::size_t i = 0; i < count; ++i)
        in >> table.levels[i] >> table.quantiles_sup[i] >> table.quantiles_int[i];
    if (!in) throw ParseError("quantile table: truncated quantile rows");
    while (in >> key >> count) {
        std::vector<double>* target = nullptr;
        if (key == "draws_sup") target = &table.sorted_draws_sup;
        else if (key == "draws_int") target = &table.sorted_draws_int;
        else throw ParseError("quantile table: unknown section " + key);
        target->resize(count);
        for (std::size_t i = 0; i < count; ++i) in >> (*target)[i];
        if (!in) throw ParseError("quantile table: truncated " + key);
    }
    return table;
}

inline QuantileTable load_quantile_table_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError("cannot open quantile table: " + path);
    return load_quantile_table(in);
}

} // namespace eivcp
