#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace nvcav
{

// Comma-separated table with '#'-prefixed comment lines (used for units and
// provenance) and an optional header row. Numbers are read and written with
// std::from_chars / std::to_chars, so the decimal point never depends on the
// locale. Empty cells read as NaN.
struct CsvTable
{
    std::vector<std::string> comments;
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    std::size_t column_index(std::string_view name) const;
    std::vector<double> column(std::string_view name) const;
    std::vector<double> column(std::size_t index) const;
    std::size_t column_count() const { return columns.size(); }
    std::size_t row_count() const { return rows.size(); }
};

// Throws ParseError naming the offending line.
CsvTable parse_csv(std::string_view text);
// Throws IoError when the file cannot be read, ParseError on bad content.
CsvTable read_csv(const std::filesystem::path &path);

std::string format_csv(const CsvTable &table);

// Builds a table from equally long columns.
CsvTable make_table(std::vector<std::string> names, const std::vector<std::vector<double>> &columns,
                    std::vector<std::string> comments = {});

// Shortest round-trip decimal representation.
std::string format_number(double value);

std::string read_text_file(const std::filesystem::path &path);
void write_text_file(const std::filesystem::path &path, std::string_view contents);

} // namespace nvcav
