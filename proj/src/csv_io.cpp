#include "loraplan/csv_io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include "loraplan/errors.hpp"

namespace loraplan {

std::string format_number(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general);
    if (ec != std::errc()) throw std::runtime_error("format_number failed");
    return std::string(buf, ptr);
}

std::string to_csv_string(const CsvTable& table) {
    std::string out;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) out += ',';
        out += table.header[i];
    }
    out += '\n';
    for (const auto& row : table.rows) {
        for (std::size_t i = 0; i < row.size(); ++i) {
            if (i) out += ',';
            out += format_number(row[i]);
        }
        out += '\n';
    }
    return out;
}

void write_csv(const std::filesystem::path& path, const CsvTable& table) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write '" + path.string() + "'");
    out << to_csv_string(table);
    if (!out) throw std::runtime_error("write failed for '" + path.string() + "'");
}

namespace {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream in(line);
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    return cells;
}

std::string trim(std::string s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return {};
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

double parse_cell(const std::string& cell, const std::string& source, int line, int column) {
    const std::string s = trim(cell);
    if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
    if (s == "inf") return std::numeric_limits<double>::infinity();
    if (s == "-inf") return -std::numeric_limits<double>::infinity();
    double v = 0.0;
    const char* first = s.data();
    if (!s.empty() && s[0] == '+') ++first;
    const auto [ptr, ec] = std::from_chars(first, s.data() + s.size(), v);
    if (s.empty() || ec != std::errc() || ptr != s.data() + s.size())
        throw ParseError(source, line, column, "not a number: '" + s + "'");
    return v;
}

}  // namespace

CsvTable parse_csv(const std::string& text, const std::string& source) {
    CsvTable table;
    std::istringstream in(text);
    std::string line;
    int line_no = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++line_no;
        if (trim(line).empty()) continue;
        auto cells = split(line);
        if (!have_header) {
            for (auto& c : cells) table.header.push_back(trim(c));
            have_header = true;
            continue;
        }
        if (cells.size() != table.header.size())
            throw ParseError(source, line_no, 1,
                             "expected " + std::to_string(table.header.size()) + " columns, found " +
                                 std::to_string(cells.size()));
        std::vector<double> row;
        for (std::size_t i = 0; i < cells.size(); ++i)
            row.push_back(parse_cell(cells[i], source, line_no, static_cast<int>(i) + 1));
        table.rows.push_back(std::move(row));
    }
    if (!have_header) throw ParseError(source, 1, 1, "empty CSV file");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open '" + path.string() + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_csv(buf.str(), path.string());
}

CsvTable matrix_table(const Eigen::MatrixXd& m) {
    CsvTable t;
    t.header.push_back("mcs");
    for (Eigen::Index g = 0; g < m.cols(); ++g) t.header.push_back(std::to_string(g));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        std::vector<double> row{static_cast<double>(i)};
        for (Eigen::Index g = 0; g < m.cols(); ++g) row.push_back(m(i, g));
        t.rows.push_back(std::move(row));
    }
    return t;
}

Eigen::MatrixXd table_matrix(const CsvTable& t) {
    if (t.header.size() < 2 || t.header.front() != "mcs")
        throw std::invalid_argument("matrix CSV: first column must be 'mcs' followed by one column per group");
    if (t.rows.empty()) throw std::invalid_argument("matrix CSV: no MCS rows");
    const auto cols = static_cast<Eigen::Index>(t.header.size() - 1);
    Eigen::MatrixXd m(static_cast<Eigen::Index>(t.rows.size()), cols);
    for (std::size_t i = 0; i < t.rows.size(); ++i) {
        if (t.rows[i].front() != static_cast<double>(i))
            throw std::invalid_argument("matrix CSV: rows must list MCS 0, 1, ... in order (row " +
                                        std::to_string(i + 1) + ")");
        for (Eigen::Index g = 0; g < cols; ++g)
            m(static_cast<Eigen::Index>(i), g) = t.rows[i][static_cast<std::size_t>(g + 1)];
    }
    return m;
}

void write_capacity_csv(const std::filesystem::path& path, const Eigen::MatrixXd& nu) {
    write_csv(path, matrix_table(nu));
}

Eigen::MatrixXd read_capacity_csv(const std::filesystem::path& path) {
    return table_matrix(read_csv(path));
}

void write_counts_csv(const std::filesystem::path& path, const CountMatrix& counts) {
    write_csv(path, matrix_table(counts.cast<double>()));
}

CountMatrix read_counts_csv(const std::filesystem::path& path) {
    const Eigen::MatrixXd m = read_capacity_csv(path);
    if (!(m.array() == m.array().round()).all() || (m.array() < 0).any())
        throw std::invalid_argument("count CSV '" + path.string() + "' holds non-integer or negative entries");
    return m.cast<std::int64_t>();
}

CsvTable curve_table(const std::string& x_name, const std::string& y_name, const Eigen::VectorXd& x,
                     const Eigen::VectorXd& y) {
    if (x.size() != y.size()) throw std::invalid_argument("curve_table: length mismatch");
    CsvTable t;
    t.header = {x_name, y_name};
    for (Eigen::Index k = 0; k < x.size(); ++k) t.rows.push_back({x[k], y[k]});
    return t;
}

CsvTable sim_motes_table(const std::vector<MoteStats>& motes) {
    CsvTable t;
    t.header = {"mote_id", "distance_m", "generated", "delivered", "plr"};
    for (const auto& m : motes)
        t.rows.push_back({static_cast<double>(m.id), m.distance, static_cast<double>(m.generated),
                          static_cast<double>(m.delivered), m.plr()});
    return t;
}

CsvTable sim_bins_table(const std::vector<DistanceBin>& bins) {
    CsvTable t;
    t.header = {"x_bin_center", "plr_mean", "ci_low", "ci_high"};
    for (const auto& b : bins) t.rows.push_back({b.center, b.plr, b.ci_low, b.ci_high});
    return t;
}

}  // namespace loraplan
