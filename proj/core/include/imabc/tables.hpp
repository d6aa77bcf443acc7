#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace imabc {

/// Comma-separated table with a header row. Fields never contain commas,
/// quotes or newlines, so no quoting is performed.
struct csv_table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;

    std::size_t column(const std::string& name) const; ///< throws config_error when absent
    bool has_column(const std::string& name) const;
};

csv_table read_csv(const std::filesystem::path& path);
csv_table parse_csv(const std::string& text, const std::string& origin = "<string>");
void write_csv(const csv_table& table, const std::filesystem::path& path);
std::string to_csv_string(const csv_table& table);

/// Shortest decimal text that parses back to exactly `x`; "nan", "inf", "-inf" otherwise.
std::string format_double(double x);
double parse_double(const std::string& s);

} // namespace imabc
