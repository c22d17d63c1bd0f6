#include "nvcav/config.hpp"

#include "nvcav/csv.hpp"
#include "nvcav/errors.hpp"

#include <charconv>
#include <cmath>

namespace nvcav
{

std::string_view trim(std::string_view text)
{
    const auto first = text.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos)
        return {};
    const auto last = text.find_last_not_of(" \t\r\n");
    return text.substr(first, last - first + 1);
}

std::vector<std::string> split(std::string_view text, char delimiter)
{
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true)
    {
        const auto pos = text.find(delimiter, start);
        out.emplace_back(trim(text.substr(start, pos == std::string_view::npos ? pos : pos - start)));
        if (pos == std::string_view::npos)
            break;
        start = pos + 1;
    }
    return out;
}

double parse_double(std::string_view text, std::size_t line)
{
    auto t = trim(text);
    if (!t.empty() && t.front() == '+')
        t.remove_prefix(1);
    if (t == "inf" || t == "infinity")
        return INFINITY;
    if (t == "nan")
        return NAN;
    double value = 0.0;
    const auto *end = t.data() + t.size();
    auto [ptr, ec] = std::from_chars(t.data(), end, value);
    if (t.empty() || ec != std::errc{} || ptr != end)
        throw ParseError("not a number: '" + std::string(text) + "'", line);
    return value;
}

KeyValueConfig KeyValueConfig::parse(std::string_view text)
{
    KeyValueConfig cfg;
    std::size_t line_no = 0;
    std::size_t start = 0;
    while (start <= text.size())
    {
        const auto nl = text.find('\n', start);
        auto line = text.substr(start, nl == std::string_view::npos ? std::string_view::npos : nl - start);
        ++line_no;
        start = nl == std::string_view::npos ? text.size() + 1 : nl + 1;

        if (const auto hash = line.find('#'); hash != std::string_view::npos)
            line = line.substr(0, hash);
        line = trim(line);
        if (line.empty())
            continue;
        const auto eq = line.find('=');
        if (eq == std::string_view::npos)
            throw ParseError("expected 'key = value'", line_no);
        const auto key = trim(line.substr(0, eq));
        if (key.empty())
            throw ParseError("empty key", line_no);
        cfg.entries_.push_back({std::string(key), std::string(trim(line.substr(eq + 1))), line_no});
    }
    return cfg;
}

KeyValueConfig KeyValueConfig::load(const std::filesystem::path &path) { return parse(read_text_file(path)); }

const KeyValueConfig::Entry *KeyValueConfig::last(std::string_view key) const
{
    for (auto it = entries_.rbegin(); it != entries_.rend(); ++it)
        if (it->key == key)
            return &*it;
    return nullptr;
}

bool KeyValueConfig::contains(std::string_view key) const { return last(key) != nullptr; }

std::optional<std::string> KeyValueConfig::find(std::string_view key) const
{
    if (const auto *e = last(key))
        return e->value;
    return std::nullopt;
}

std::vector<std::string> KeyValueConfig::get_all(std::string_view key) const
{
    std::vector<std::string> out;
    for (const auto &e : entries_)
        if (e.key == key)
            out.push_back(e.value);
    return out;
}

double KeyValueConfig::get_double(std::string_view key, double fallback) const
{
    const auto *e = last(key);
    return e ? parse_double(e->value, e->line) : fallback;
}

double KeyValueConfig::require_double(std::string_view key) const
{
    const auto *e = last(key);
    if (!e)
        throw ParseError("missing key '" + std::string(key) + "'", 0);
    return parse_double(e->value, e->line);
}

std::string KeyValueConfig::get_string(std::string_view key, std::string fallback) const
{
    const auto *e = last(key);
    return e ? e->value : fallback;
}

std::vector<double> KeyValueConfig::get_list(std::string_view key, std::vector<double> fallback) const
{
    const auto *e = last(key);
    if (!e)
        return fallback;
    std::vector<double> out;
    for (const auto &tok : split(e->value, ','))
        out.push_back(parse_double(tok, e->line));
    return out;
}

void KeyValueConfig::set(std::string key, std::string value)
{
    entries_.push_back({std::move(key), std::move(value), 0});
}

std::string KeyValueConfig::canonical_text() const
{
    std::string out;
    for (const auto &e : entries_)
        out += e.key + " = " + e.value + "\n";
    return out;
}

} // namespace nvcav
