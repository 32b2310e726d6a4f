#include "lagvcm/cli/csv.hpp"

#include "lagvcm/error.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>
#include <system_error>
#include <unistd.h>

namespace lagvcm::cli {
namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_line(std::string_view line) {
    std::vector<std::string> cells;
    std::string cur;
    bool quoted = false;
    for (char c : line) {
        if (c == '"') {
            quoted = !quoted;
        } else if (c == ',' && !quoted) {
            cells.push_back(trim(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    cells.push_back(trim(cur));
    return cells;
}

bool parse_number(const std::string& s, double& out) {
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), out);
    return ec == std::errc() && ptr == s.data() + s.size();
}

} // namespace

std::size_t CsvTable::column(const std::string& name) const {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) throw ConfigError("missing column '" + name + "'");
    return static_cast<std::size_t>(it - header.begin());
}

bool CsvTable::has_column(const std::string& name) const {
    return std::find(header.begin(), header.end(), name) != header.end();
}

std::vector<double> CsvTable::numeric(const std::string& name) const {
    const std::size_t c = column(name);
    std::vector<double> values(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (!parse_number(rows[i][c], values[i])) {
            throw ConfigError("line " + std::to_string(line_numbers[i]) + ", column '" + name +
                              "': cannot parse '" + rows[i][c] + "' as a number");
        }
    }
    return values;
}

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    std::size_t number = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++number;
        const std::string t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto cells = split_line(t);
        if (!have_header) {
            table.header = std::move(cells);
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size()) {
            throw ConfigError(source + ": line " + std::to_string(number) + ": expected " +
                              std::to_string(table.header.size()) + " fields, found " +
                              std::to_string(cells.size()));
        }
        table.rows.push_back(std::move(cells));
        table.line_numbers.push_back(number);
    }
    if (!have_header) throw ConfigError(source + ": missing header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

LoadedData load_dataset(const CsvTable& table, const DataSpec& spec) {
    if (!(spec.t_scale > 0.0)) throw ConfigError("config field 'data.t_scale': must be positive");
    std::vector<std::string> names = spec.x;
    if (names.empty()) {
        for (int j = 1; table.has_column("x" + std::to_string(j)); ++j) names.push_back("x" + std::to_string(j));
        if (names.empty() && !spec.intercept) throw ConfigError("missing column 'x1'");
    }
    const std::vector<double> t = table.numeric(spec.t);
    const std::vector<double> y = table.numeric(spec.y);
    const auto n = static_cast<Eigen::Index>(t.size());
    if (n == 0) throw ConfigError("no data rows");
    const Eigen::Index offset = spec.intercept ? 1 : 0;
    Eigen::MatrixXd x(n, static_cast<Eigen::Index>(names.size()) + offset);
    if (spec.intercept) x.col(0).setOnes();
    for (std::size_t j = 0; j < names.size(); ++j) {
        const std::vector<double> col = table.numeric(names[j]);
        x.col(static_cast<Eigen::Index>(j) + offset) = Eigen::Map<const Eigen::VectorXd>(col.data(), n);
    }
    Eigen::VectorXd tv(n);
    for (Eigen::Index i = 0; i < n; ++i) {
        tv[i] = t[static_cast<std::size_t>(i)] / spec.t_scale;
        if (!(tv[i] > 0.0)) {
            throw ConfigError("line " + std::to_string(table.line_numbers[static_cast<std::size_t>(i)]) +
                              ", column '" + spec.t + "': t must be positive");
        }
    }
    if (spec.intercept) names.insert(names.begin(), "intercept");
    return {Dataset(std::move(tv), std::move(x), Eigen::Map<const Eigen::VectorXd>(y.data(), n)),
            std::move(names)};
}

LoadedData load_dataset(const std::filesystem::path& path, const DataSpec& spec) {
    return load_dataset(read_csv(path), spec);
}

std::string format_double(double v) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, ptr);
}

void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
    std::filesystem::path tmp = path;
    tmp += ".tmp." + std::to_string(::getpid());
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
        out << contents;
        out.flush();
        if (!out) throw ConfigError("cannot write '" + path.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) {
        std::filesystem::remove(tmp, ec);
        throw ConfigError("cannot write '" + path.string() + "'");
    }
}

CsvWriter::CsvWriter(std::vector<std::string> header) : width_(header.size()) {
    for (std::size_t j = 0; j < header.size(); ++j) out_ += (j ? "," : "") + header[j];
    out_ += '\n';
}

CsvWriter& CsvWriter::cell(const std::string& v) {
    if (filled_ > 0) out_ += ',';
    out_ += v;
    ++filled_;
    return *this;
}

CsvWriter& CsvWriter::cell(double v) { return cell(format_double(v)); }

CsvWriter& CsvWriter::cell(long long v) { return cell(std::to_string(v)); }

void CsvWriter::end_row() {
    if (filled_ != width_) {
        throw DimensionError("csv row has " + std::to_string(filled_) + " cells, expected " +
                             std::to_string(width_));
    }
    out_ += '\n';
    filled_ = 0;
}

} // namespace lagvcm::cli
