#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "poet/linalg.hpp"

namespace poet {

/// p x T panel of excess returns, one row per asset.
struct ReturnPanel {
    Matrix Y;
    std::vector<std::string> asset_ids;
    std::vector<std::string> timestamps;

    Index p() const noexcept { return Y.rows(); }
    Index T() const noexcept { return Y.cols(); }

    /// Labels default to "a0..", "t0.." when empty. Throws
    /// std::invalid_argument on shape, label or finiteness violations.
    static ReturnPanel from_matrix(Matrix y, std::vector<std::string> asset_ids = {},
                                   std::vector<std::string> timestamps = {});

    /// Columns [first, first + count).
    ReturnPanel slice_time(Index first, Index count) const;

    /// True when every row mean is within 1e-12 of zero.
    bool is_demeaned(double tol = 1e-12) const;
};

enum class Orientation { assets_as_columns, assets_as_rows };

/// Whether the first column of the file holds labels (timestamps when assets
/// are columns, asset ids when assets are rows). `detect` treats the column as
/// labels if the header cell is empty or a common label name, or if any
/// entry below it is not numeric.
enum class LabelColumn { detect, present, absent };

struct CsvOptions {
    Orientation orientation = Orientation::assets_as_columns;
    LabelColumn label_column = LabelColumn::detect;
};

/// Throws ParseError naming the line and column of the first bad cell.
ReturnPanel load_csv(const std::filesystem::path& path, const CsvOptions& options = {});
ReturnPanel parse_csv(std::istream& in, const CsvOptions& options = {});

/// Writes the canonical layout: header "timestamp,<asset ids>", one row per
/// time point, values at 17 significant digits.
void save_csv(const ReturnPanel& panel, const std::filesystem::path& path);
void write_csv(const ReturnPanel& panel, std::ostream& out);

/// Subtract each asset's time-series mean.
ReturnPanel demean(const ReturnPanel& panel);

/// T^{-1} Y Y'. Divides by T so that it matches the factor-model algebra
/// exactly. A panel that is not demeaned produces a warning on stderr.
SymMatrix sample_covariance(const ReturnPanel& panel);

/// Formats with printf("%.17g").
std::string format_double(double v);

/// Matrix export: header row of column labels, first column of row labels.
void write_matrix_csv(const Matrix& m, const std::filesystem::path& path,
                      const std::vector<std::string>& row_labels = {},
                      const std::vector<std::string>& col_labels = {});
Matrix read_matrix_csv(const std::filesystem::path& path);

}  // namespace poet
