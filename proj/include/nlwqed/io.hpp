#pragma once

// CSV and JSON plumbing for the data files consumed by the plotting scripts.

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "json.hpp"

#include "nlwqed/core.hpp"

namespace nlwqed {

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

// Shortest representation that parses back to the same double.
std::string format_double(double x);

void write_csv(std::ostream& os, const CsvTable& table);
CsvTable read_csv(std::istream& is);
void write_csv_file(const std::filesystem::path& path, const CsvTable& table);
CsvTable read_csv_file(const std::filesystem::path& path);

// Matrix as nested rows of [re, im] pairs, row-major.
nlohmann::json matrix_to_json(const OperatorMatrix& m);
OperatorMatrix matrix_from_json(const nlohmann::json& j);

void write_json_file(const std::filesystem::path& path, const nlohmann::json& j);

} // namespace nlwqed
