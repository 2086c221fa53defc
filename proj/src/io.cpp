#include "nlwqed/io.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

namespace nlwqed {

std::string format_double(double x) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, x);
    return std::string(buf, res.ptr);
}

namespace {

void emit_cell(std::ostream& os, const std::string& cell) {
    if (cell.find_first_of(",\"\n\r") == std::string::npos) {
        os << cell;
        return;
    }
    os << '"';
    for (char c : cell) {
        if (c == '"') os << '"';
        os << c;
    }
    os << '"';
}

std::vector<std::string> split_record(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(std::move(cell));
            cell.clear();
        } else {
            cell += c;
        }
    }
    if (quoted) throw ConfigError("csv record has an unterminated quote");
    cells.push_back(std::move(cell));
    return cells;
}

} // namespace

void write_csv(std::ostream& os, const CsvTable& table) {
    auto emit = [&](const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) {
            if (i) os << ',';
            emit_cell(os, cells[i]);
        }
        os << '\n';
    };
    emit(table.header);
    for (const auto& row : table.rows) {
        if (row.size() != table.header.size()) throw DimensionError("csv row width differs from header");
        emit(row);
    }
}

CsvTable read_csv(std::istream& is) {
    CsvTable table;
    std::string line;
    bool first = true;
    std::string record;
    std::size_t quotes = 0;
    while (std::getline(is, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (quotes % 2) record += '\n';
        record += line;
        quotes += static_cast<std::size_t>(std::count(line.begin(), line.end(), '"'));
        // An odd quote count means a quoted field continues on the next line.
        if (quotes % 2) continue;
        auto cells = split_record(record);
        record.clear();
        quotes = 0;
        if (first) {
            table.header = std::move(cells);
            first = false;
        } else {
            table.rows.push_back(std::move(cells));
        }
    }
    if (quotes % 2) split_record(record);
    if (first) throw ConfigError("csv input has no header row");
    return table;
}

void write_csv_file(const std::filesystem::path& path, const CsvTable& table) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    write_csv(os, table);
}

CsvTable read_csv_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw ConfigError("cannot open " + path.string());
    return read_csv(is);
}

nlohmann::json matrix_to_json(const OperatorMatrix& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        nlohmann::json row = nlohmann::json::array();
        for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back({m(i, j).real(), m(i, j).imag()});
        rows.push_back(std::move(row));
    }
    return rows;
}

OperatorMatrix matrix_from_json(const nlohmann::json& j) {
    if (!j.is_array()) throw ConfigError("matrix json must be an array of rows");
    const auto rows = static_cast<Eigen::Index>(j.size());
    const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
    OperatorMatrix m(rows, cols);
    for (Eigen::Index r = 0; r < rows; ++r) {
        if (static_cast<Eigen::Index>(j[r].size()) != cols) throw ConfigError("ragged matrix json");
        for (Eigen::Index c = 0; c < cols; ++c)
            m(r, c) = Complex(j[r][c].at(0).get<double>(), j[r][c].at(1).get<double>());
    }
    return m;
}

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream os(path, std::ios::binary);
    if (!os) throw ConfigError("cannot open " + path.string() + " for writing");
    os << j.dump(1) << '\n';
}

} // namespace nlwqed
