#pragma once

#include <optional>
#include <string>
#include <vector>

namespace dartkit {

// Minimal delimited-text support. All artifact file formats are plain
// comma-separated text with a header row and no quoting.
struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    // Index of a required column; throws MissingColumn otherwise.
    std::size_t column(const std::string& name) const;
    std::optional<std::size_t> find_column(const std::string& name) const;
};

CsvTable read_csv(const std::string& path);
void write_csv(const std::string& path, const CsvTable& table);

std::vector<std::string> split_csv_line(const std::string& line);
std::string join_csv(const std::vector<std::string>& fields);

// Full-precision decimal rendering that round-trips doubles exactly.
std::string format_double(double v);

}  // namespace dartkit
