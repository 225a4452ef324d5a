#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace msd {

// Shortest decimal representation that parses back to the identical double.
std::string format_double(double value);
std::string join_doubles(std::span<const double> values, char sep);
std::string join(const std::vector<std::string>& parts, std::string_view sep);

// Strict number parsing: the whole token must be consumed.
std::optional<double> parse_double(std::string_view token);
std::optional<long long> parse_int(std::string_view token);

std::string_view trim(std::string_view s);
std::vector<std::string> split(std::string_view s, char sep);
// Splits on any run of whitespace and/or commas.
std::vector<std::string> split_fields(std::string_view s);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view contents);

// Minimal CSV table: '#' lines and blank lines are skipped, no quoting.
struct CsvRow {
    std::size_t line = 0;
    std::vector<std::string> fields;
};

struct CsvTable {
    std::vector<std::string> header;
    std::vector<CsvRow> rows;
    std::size_t column(std::string_view name) const;  // throws SchemaError
};

CsvTable read_csv(const std::filesystem::path& path);
CsvTable parse_csv(std::string_view text, const std::string& source);

// Ordered "key = value" document with a versioned first line, e.g.
//   msdensity-checkpoint 1
//   input_dim = 541
class KeyedText {
public:
    KeyedText() = default;
    KeyedText(std::string kind, int version) : kind_(std::move(kind)), version_(version) {}

    const std::string& kind() const noexcept { return kind_; }
    int version() const noexcept { return version_; }

    void set(const std::string& key, std::string value);
    void set(const std::string& key, double value) { set(key, format_double(value)); }
    void set_int(const std::string& key, long long value) { set(key, std::to_string(value)); }

    bool contains(const std::string& key) const;
    const std::string& get(const std::string& key) const;  // throws ParseError
    double get_double(const std::string& key) const;
    long long get_int(const std::string& key) const;
    std::vector<double> get_doubles(const std::string& key) const;

    const std::vector<std::pair<std::string, std::string>>& entries() const { return entries_; }

    std::string serialize() const;
    static KeyedText parse(std::string_view text, const std::string& source);
    static KeyedText load(const std::filesystem::path& path);
    void save(const std::filesystem::path& path) const;

private:
    std::string kind_;
    int version_ = 0;
    std::vector<std::pair<std::string, std::string>> entries_;
    std::map<std::string, std::size_t> index_;
};

}  // namespace msd
