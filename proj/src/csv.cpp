#include "nvcav/csv.hpp"

#include "nvcav/config.hpp"
#include "nvcav/errors.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

namespace nvcav
{

std::size_t CsvTable::column_index(std::string_view name) const
{
    for (std::size_t i = 0; i < columns.size(); ++i)
        if (columns[i] == name)
            return i;
    throw ParseError("missing column '" + std::string(name) + "'", 0);
}

std::vector<double> CsvTable::column(std::string_view name) const { return column(column_index(name)); }

std::vector<double> CsvTable::column(std::size_t index) const
{
    std::vector<double> out;
    out.reserve(rows.size());
    for (const auto &r : rows)
        out.push_back(index < r.size() ? r[index] : std::numeric_limits<double>::quiet_NaN());
    return out;
}

namespace
{

bool looks_numeric(std::string_view tok)
{
    tok = trim(tok);
    if (tok.empty())
        return true;
    if (tok.front() == '+')
        tok.remove_prefix(1);
    double v;
    auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
    return ec == std::errc{} && ptr == tok.data() + tok.size();
}

} // namespace

CsvTable parse_csv(std::string_view text)
{
    CsvTable t;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool header_done = false;
    while (start < text.size())
    {
        const auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        start = nl == std::string_view::npos ? text.size() : nl + 1;
        ++line_no;
        line = trim(line);
        if (line.empty())
            continue;
        if (line.front() == '#')
        {
            t.comments.emplace_back(trim(line.substr(1)));
            continue;
        }
        auto cells = split(line, ',');
        if (!header_done)
        {
            header_done = true;
            bool numeric = true;
            for (const auto &c : cells)
                numeric = numeric && looks_numeric(c);
            if (!numeric)
            {
                t.columns = std::move(cells);
                continue;
            }
            for (std::size_t i = 0; i < cells.size(); ++i)
                t.columns.push_back("c" + std::to_string(i));
        }
        if (cells.size() != t.columns.size())
            throw ParseError("expected " + std::to_string(t.columns.size()) + " fields, found " +
                                 std::to_string(cells.size()),
                             line_no);
        std::vector<double> row;
        row.reserve(cells.size());
        for (const auto &c : cells)
            row.push_back(c.empty() ? std::numeric_limits<double>::quiet_NaN() : parse_double(c, line_no));
        t.rows.push_back(std::move(row));
    }
    if (t.rows.empty())
        throw ParseError("no data rows", line_no);
    return t;
}

CsvTable read_csv(const std::filesystem::path &path) { return parse_csv(read_text_file(path)); }

std::string format_number(double value)
{
    if (std::isnan(value))
        return "";
    if (std::isinf(value))
        return value > 0 ? "inf" : "-inf";
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, ptr);
}

std::string format_csv(const CsvTable &table)
{
    std::string out;
    for (const auto &c : table.comments)
        out += "# " + c + "\n";
    for (std::size_t i = 0; i < table.columns.size(); ++i)
        out += (i ? "," : "") + table.columns[i];
    out += "\n";
    for (const auto &r : table.rows)
    {
        for (std::size_t i = 0; i < r.size(); ++i)
        {
            if (i)
                out += ',';
            out += format_number(r[i]);
        }
        out += "\n";
    }
    return out;
}

CsvTable make_table(std::vector<std::string> names, const std::vector<std::vector<double>> &columns,
                    std::vector<std::string> comments)
{
    if (names.size() != columns.size())
        throw std::invalid_argument("make_table: name/column count mismatch");
    CsvTable t;
    t.comments = std::move(comments);
    t.columns = std::move(names);
    const std::size_t n = columns.empty() ? 0 : columns.front().size();
    for (const auto &c : columns)
        if (c.size() != n)
            throw std::invalid_argument("make_table: columns differ in length");
    t.rows.assign(n, std::vector<double>(columns.size()));
    for (std::size_t j = 0; j < columns.size(); ++j)
        for (std::size_t i = 0; i < n; ++i)
            t.rows[i][j] = columns[j][i];
    return t;
}

std::string read_text_file(const std::filesystem::path &path)
{
    std::ifstream in(path, std::ios::binary);
    if (!in)
        throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path &path, std::string_view contents)
{
    if (path.has_parent_path())
    {
        std::error_code ec;
        std::filesystem::create_directories(path.parent_path(), ec);
    }
    std::ofstream out(path, std::ios::binary);
    if (!out)
        throw IoError("cannot write " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out)
        throw IoError("write failed for " + path.string());
}

} // namespace nvcav
