#pragma once

#include "lagvcm/design.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace lagvcm::cli {

/// Header plus raw string cells of a comma-separated file. Lines starting
/// with '#' and blank lines are skipped; surrounding double quotes are
/// stripped from cells.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
    std::vector<std::size_t> line_numbers;  ///< 1-based source line of each row

    /// Index of a header column. Throws ConfigError naming the column.
    std::size_t column(const std::string& name) const;
    bool has_column(const std::string& name) const;
    /// Numeric values of a column. Throws ConfigError with the line number
    /// of the first unparsable cell.
    std::vector<double> numeric(const std::string& name) const;
};

/// Throws ConfigError on unreadable files, a missing header or ragged rows.
CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(const std::string& text, const std::string& source = "input");

/// Column mapping from a CSV file onto (t, x_1..x_r, y).
struct DataSpec {
    std::string t = "t";
    std::vector<std::string> x;  ///< empty: x1, x2, ... while present
    std::string y = "y";
    double t_scale = 1.0;        ///< t is divided by this
    bool intercept = false;      ///< prepend a constant covariate x0 = 1
};

struct LoadedData {
    Dataset data;
    std::vector<std::string> covariates;  ///< names of the columns of x
};

LoadedData load_dataset(const CsvTable& table, const DataSpec& spec);
LoadedData load_dataset(const std::filesystem::path& path, const DataSpec& spec);

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Writes to a temporary sibling and renames it over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

/// Builds CSV text row by row.
class CsvWriter {
public:
    explicit CsvWriter(std::vector<std::string> header);
    CsvWriter& cell(const std::string& v);
    CsvWriter& cell(double v);
    CsvWriter& cell(long long v);
    CsvWriter& cell(int v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(std::size_t v) { return cell(static_cast<long long>(v)); }
    CsvWriter& cell(bool v) { return cell(static_cast<long long>(v ? 1 : 0)); }
    /// Ends the current row. Throws DimensionError on a wrong cell count.
    void end_row();
    std::string str() const { return out_; }

private:
    std::size_t width_;
    std::size_t filled_ = 0;
    std::string out_;
};

} // namespace lagvcm::cli
