#include "poet/panel.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "poet/errors.hpp"

namespace poet {

namespace {

std::string trim(std::string_view s) {
    std::size_t b = 0;
    std::size_t e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

std::vector<std::string> split_row(const std::string& line) {
    std::vector<std::string> cells;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        if (comma == std::string::npos) {
            cells.push_back(trim(std::string_view(line).substr(start)));
            break;
        }
        cells.push_back(trim(std::string_view(line).substr(start, comma - start)));
        start = comma + 1;
    }
    return cells;
}

bool parse_number(const std::string& cell, double& out) {
    if (cell.empty()) return false;
    const char* first = cell.data();
    const char* last = cell.data() + cell.size();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

bool is_label_header(const std::string& cell) {
    std::string lower;
    for (char c : cell) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    static const std::unordered_set<std::string> names{
        "", "date", "time", "timestamp", "t", "asset", "assets", "id", "ticker", "permno"};
    return names.count(lower) > 0;
}

void check_unique(const std::vector<std::string>& ids, const char* what, bool in_header,
                  std::size_t offset) {
    std::unordered_set<std::string> seen;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (!seen.insert(ids[k]).second) {
            const std::size_t line = in_header ? 1 : k + 2;
            const std::size_t col = in_header ? k + 1 + offset : 1;
            throw ParseError(std::string("duplicate ") + what + " '" + ids[k] + "'", line, col);
        }
    }
}

}  // namespace

ReturnPanel ReturnPanel::from_matrix(Matrix y, std::vector<std::string> asset_ids,
                                     std::vector<std::string> timestamps) {
    if (y.rows() < 1 || y.cols() < 2) {
        throw std::invalid_argument("ReturnPanel: need p >= 1 and T >= 2, got " +
                                    std::to_string(y.rows()) + "x" + std::to_string(y.cols()));
    }
    if (!y.allFinite()) throw std::invalid_argument("ReturnPanel: non-finite entries");
    if (asset_ids.empty()) {
        for (Index i = 0; i < y.rows(); ++i) asset_ids.push_back("a" + std::to_string(i));
    }
    if (timestamps.empty()) {
        for (Index t = 0; t < y.cols(); ++t) timestamps.push_back("t" + std::to_string(t));
    }
    if (static_cast<Index>(asset_ids.size()) != y.rows() ||
        static_cast<Index>(timestamps.size()) != y.cols()) {
        throw std::invalid_argument("ReturnPanel: label counts do not match the data shape");
    }
    return ReturnPanel{std::move(y), std::move(asset_ids), std::move(timestamps)};
}

ReturnPanel ReturnPanel::slice_time(Index first, Index count) const {
    if (first < 0 || count < 0 || first + count > T()) {
        throw std::invalid_argument("slice_time: range out of bounds");
    }
    std::vector<std::string> ts(timestamps.begin() + first, timestamps.begin() + first + count);
    return ReturnPanel{Y.middleCols(first, count), asset_ids, std::move(ts)};
}

bool ReturnPanel::is_demeaned(double tol) const {
    return (Y.rowwise().mean().cwiseAbs().array() <= tol).all();
}

ReturnPanel parse_csv(std::istream& in, const CsvOptions& options) {
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (trim(line).empty()) continue;
        rows.push_back(split_row(line));
    }
    if (rows.empty()) throw ParseError("empty CSV", 1, 1);

    const std::vector<std::string>& header = rows.front();
    const std::size_t width = header.size();
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != width) {
            throw ParseError("ragged row: expected " + std::to_string(width) + " cells, found " +
                                 std::to_string(rows[r].size()),
                             r + 1, std::min(rows[r].size(), width) + 1);
        }
    }

    bool labels = options.label_column == LabelColumn::present;
    if (options.label_column == LabelColumn::detect) {
        labels = is_label_header(header.front());
        double dummy = 0.0;
        for (std::size_t r = 1; r < rows.size() && !labels; ++r) {
            if (!parse_number(rows[r].front(), dummy)) labels = true;
        }
    }
    const std::size_t offset = labels ? 1 : 0;
    if (width <= offset) throw ParseError("no data columns", 1, 1);

    const std::size_t n_rows = rows.size() - 1;
    const std::size_t n_cols = width - offset;
    Matrix data(static_cast<Index>(n_rows), static_cast<Index>(n_cols));
    for (std::size_t r = 0; r < n_rows; ++r) {
        for (std::size_t c = 0; c < n_cols; ++c) {
            const std::string& cell = rows[r + 1][c + offset];
            double v = 0.0;
            if (!parse_number(cell, v)) {
                throw ParseError("non-numeric cell '" + cell + "'", r + 2, c + offset + 1);
            }
            if (!std::isfinite(v)) {
                throw ParseError("non-finite cell '" + cell + "'", r + 2, c + offset + 1);
            }
            data(static_cast<Index>(r), static_cast<Index>(c)) = v;
        }
    }

    std::vector<std::string> col_labels(header.begin() + static_cast<std::ptrdiff_t>(offset),
                                        header.end());
    std::vector<std::string> row_labels;
    for (std::size_t r = 0; r < n_rows; ++r) {
        row_labels.push_back(labels ? rows[r + 1].front() : std::to_string(r));
    }

    const bool assets_cols = options.orientation == Orientation::assets_as_columns;
    check_unique(col_labels, assets_cols ? "asset id" : "timestamp", true, offset);
    if (labels) check_unique(row_labels, assets_cols ? "timestamp" : "asset id", false, 0);

    Matrix y = assets_cols ? Matrix(data.transpose()) : data;
    if (y.rows() < 1 || y.cols() < 2) {
        throw ParseError("panel needs at least one asset and two time points", 1, 1);
    }
    if (assets_cols) {
        return ReturnPanel{std::move(y), std::move(col_labels), std::move(row_labels)};
    }
    return ReturnPanel{std::move(y), std::move(row_labels), std::move(col_labels)};
}

ReturnPanel load_csv(const std::filesystem::path& path, const CsvOptions& options) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open panel file: " + path.string());
    return parse_csv(in, options);
}

std::string format_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void write_csv(const ReturnPanel& panel, std::ostream& out) {
    out << "timestamp";
    for (const auto& id : panel.asset_ids) out << ',' << id;
    out << '\n';
    for (Index t = 0; t < panel.T(); ++t) {
        out << panel.timestamps[static_cast<std::size_t>(t)];
        for (Index i = 0; i < panel.p(); ++i) out << ',' << format_double(panel.Y(i, t));
        out << '\n';
    }
}

void save_csv(const ReturnPanel& panel, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write panel file: " + path.string());
    write_csv(panel, out);
}

ReturnPanel demean(const ReturnPanel& panel) {
    ReturnPanel out = panel;
    const Vector mean = panel.Y.rowwise().mean();
    out.Y.colwise() -= mean;
    return out;
}

SymMatrix sample_covariance(const ReturnPanel& panel) {
    const double scale = panel.Y.size() > 0 ? panel.Y.cwiseAbs().maxCoeff() : 0.0;
    if (!panel.is_demeaned(1e-10 * (1.0 + scale))) {
        std::cerr << "warning: sample_covariance called on a panel that is not demeaned\n";
    }
    const double t = static_cast<double>(panel.T());
    Matrix s(panel.p(), panel.p());
    s.setZero();
    s.selfadjointView<Eigen::Lower>().rankUpdate(panel.Y, 1.0 / t);
    return SymMatrix(Matrix(s.selfadjointView<Eigen::Lower>()));
}

void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const std::vector<std::string>& row_labels,
                      const std::vector<std::string>& col_labels) {
    std::ofstream out(path);
    if (!out) throw std::invalid_argument("cannot write matrix file: " + path.string());
    auto col_label = [&](Index j) {
        return col_labels.empty() ? std::to_string(j) : col_labels[static_cast<std::size_t>(j)];
    };
    auto row_label = [&](Index i) {
        return row_labels.empty() ? std::to_string(i) : row_labels[static_cast<std::size_t>(i)];
    };
    for (Index j = 0; j < m.cols(); ++j) out << ',' << col_label(j);
    out << '\n';
    for (Index i = 0; i < m.rows(); ++i) {
        out << row_label(i);
        for (Index j = 0; j < m.cols(); ++j) out << ',' << format_double(m(i, j));
        out << '\n';
    }
}

Matrix read_matrix_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::invalid_argument("cannot open matrix file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (!line.empty()) rows.push_back(split_row(line));
    }
    if (rows.empty()) return Matrix();
    const std::size_t cols = rows.front().size() - 1;
    Matrix m(static_cast<Index>(rows.size() - 1), static_cast<Index>(cols));
    for (std::size_t r = 1; r < rows.size(); ++r) {
        if (rows[r].size() != cols + 1) throw ParseError("ragged matrix row", r + 1, 1);
        for (std::size_t c = 0; c < cols; ++c) {
            double v = 0.0;
            if (!parse_number(rows[r][c + 1], v)) {
                throw ParseError("non-numeric cell '" + rows[r][c + 1] + "'", r + 1, c + 2);
            }
            m(static_cast<Index>(r - 1), static_cast<Index>(c)) = v;
        }
    }
    return m;
}

}  // namespace poet
