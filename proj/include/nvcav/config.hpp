#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace nvcav
{

// Flat `key = value` text format with '#' comments. Keys may repeat (the
// rate-model edge list uses this); scalar getters return the last value.
// Keys carry their unit as a suffix, e.g. `gamma0_mhz` or `sigma_vib_pm`.
class KeyValueConfig
{
public:
    struct Entry
    {
        std::string key;
        std::string value;
        std::size_t line = 0;
    };

    static KeyValueConfig parse(std::string_view text);
    static KeyValueConfig load(const std::filesystem::path &path);

    bool contains(std::string_view key) const;
    std::optional<std::string> find(std::string_view key) const;
    std::vector<std::string> get_all(std::string_view key) const;

    double get_double(std::string_view key, double fallback) const;
    double require_double(std::string_view key) const;
    std::string get_string(std::string_view key, std::string fallback) const;
    // Comma-separated list of numbers.
    std::vector<double> get_list(std::string_view key, std::vector<double> fallback) const;

    void set(std::string key, std::string value);

    const std::vector<Entry> &entries() const { return entries_; }

    // Normalised text (one `key = value` per line, comments dropped) used for
    // digests; independent of whitespace and comments in the source file.
    std::string canonical_text() const;

private:
    const Entry *last(std::string_view key) const;
    std::vector<Entry> entries_;
};

// Parses a double with std::from_chars; throws ParseError on trailing junk.
double parse_double(std::string_view text, std::size_t line = 0);

std::vector<std::string> split(std::string_view text, char delimiter);
std::string_view trim(std::string_view text);

} // namespace nvcav
