#include "msdensity/text.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "msdensity/error.hpp"

namespace msd {

std::string format_double(double value) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

std::string join_doubles(std::span<const double> values, char sep) {
    std::string out;
    for (std::size_t i = 0; i < values.size(); ++i) {
        if (i) out.push_back(sep);
        out += format_double(values[i]);
    }
    return out;
}

std::string join(const std::vector<std::string>& parts, std::string_view sep) {
    std::string out;
    for (std::size_t i = 0; i < parts.size(); ++i) {
        if (i) out += sep;
        out += parts[i];
    }
    return out;
}

std::optional<double> parse_double(std::string_view token) {
    token = trim(token);
    if (!token.empty() && token.front() == '+') token.remove_prefix(1);
    if (token.empty()) return std::nullopt;
    double value = 0.0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::optional<long long> parse_int(std::string_view token) {
    token = trim(token);
    if (token.empty()) return std::nullopt;
    long long value = 0;
    auto res = std::from_chars(token.data(), token.data() + token.size(), value);
    if (res.ec != std::errc() || res.ptr != token.data() + token.size()) return std::nullopt;
    return value;
}

std::string_view trim(std::string_view s) {
    const char* ws = " \t\r\n";
    auto b = s.find_first_not_of(ws);
    if (b == std::string_view::npos) return {};
    auto e = s.find_last_not_of(ws);
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(std::string_view s, char sep) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        auto pos = s.find(sep, start);
        out.emplace_back(trim(s.substr(start, pos - start)));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

std::vector<std::string> split_fields(std::string_view s) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : s) {
        if (c == ',' || c == ' ' || c == '\t' || c == '\r' || c == '\n') {
            if (!cur.empty()) out.push_back(std::move(cur));
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    if (!cur.empty()) out.push_back(std::move(cur));
    return out;
}

std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw DataError("cannot open file: " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_file(const std::filesystem::path& path, std::string_view contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw DataError("cannot write file: " + path.string());
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw DataError("write failed: " + path.string());
}

std::size_t CsvTable::column(std::string_view name) const {
    for (std::size_t i = 0; i < header.size(); ++i)
        if (header[i] == name) return i;
    throw SchemaError("missing column '" + std::string(name) + "'");
}

CsvTable parse_csv(std::string_view text, const std::string& source) {
    CsvTable table;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos <= text.size()) {
        auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        ++line_no;
        pos = end == std::string_view::npos ? text.size() + 1 : end + 1;
        if (line_no == 1 && line.starts_with("\xEF\xBB\xBF")) line.remove_prefix(3);
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        auto fields = split(t, ',');
        if (!have_header) {
            table.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != table.header.size())
            throw ParseError(source + ": expected " + std::to_string(table.header.size()) +
                                 " columns, found " + std::to_string(fields.size()),
                             line_no);
        table.rows.push_back({line_no, std::move(fields)});
    }
    if (!have_header) throw ParseError(source + ": missing header row");
    return table;
}

CsvTable read_csv(const std::filesystem::path& path) {
    return parse_csv(read_file(path), path.string());
}

void KeyedText::set(const std::string& key, std::string value) {
    if (auto it = index_.find(key); it != index_.end()) {
        entries_[it->second].second = std::move(value);
        return;
    }
    index_[key] = entries_.size();
    entries_.emplace_back(key, std::move(value));
}

bool KeyedText::contains(const std::string& key) const { return index_.count(key) != 0; }

const std::string& KeyedText::get(const std::string& key) const {
    auto it = index_.find(key);
    if (it == index_.end()) throw ParseError(kind_ + ": missing key '" + key + "'");
    return entries_[it->second].second;
}

double KeyedText::get_double(const std::string& key) const {
    auto v = parse_double(get(key));
    if (!v) throw ParseError(kind_ + ": key '" + key + "' is not a number");
    return *v;
}

long long KeyedText::get_int(const std::string& key) const {
    auto v = parse_int(get(key));
    if (!v) throw ParseError(kind_ + ": key '" + key + "' is not an integer");
    return *v;
}

std::vector<double> KeyedText::get_doubles(const std::string& key) const {
    std::vector<double> out;
    for (const auto& tok : split_fields(get(key))) {
        auto v = parse_double(tok);
        if (!v) throw ParseError(kind_ + ": key '" + key + "' has a non-numeric entry '" + tok + "'");
        out.push_back(*v);
    }
    return out;
}

std::string KeyedText::serialize() const {
    std::string out = kind_ + " " + std::to_string(version_) + "\n";
    for (const auto& [k, v] : entries_) {
        out += k;
        out += " = ";
        out += v;
        out += '\n';
    }
    return out;
}

KeyedText KeyedText::parse(std::string_view text, const std::string& source) {
    KeyedText doc;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    bool have_header = false;
    while (pos < text.size()) {
        auto end = text.find('\n', pos);
        auto line = text.substr(pos, end == std::string_view::npos ? std::string_view::npos : end - pos);
        pos = end == std::string_view::npos ? text.size() : end + 1;
        ++line_no;
        auto t = trim(line);
        if (t.empty() || t.front() == '#') continue;
        if (!have_header) {
            auto parts = split_fields(t);
            auto version = parts.size() == 2 ? parse_int(parts[1]) : std::nullopt;
            if (!version) throw ParseError(source + ": expected '<kind> <version>' header", line_no);
            doc.kind_ = parts[0];
            doc.version_ = static_cast<int>(*version);
            have_header = true;
            continue;
        }
        auto eq = t.find('=');
        if (eq == std::string_view::npos) throw ParseError(source + ": expected 'key = value'", line_no);
        auto key = std::string(trim(t.substr(0, eq)));
        if (key.empty()) throw ParseError(source + ": empty key", line_no);
        if (doc.contains(key)) throw ParseError(source + ": duplicate key '" + key + "'", line_no);
        doc.set(key, std::string(trim(t.substr(eq + 1))));
    }
    if (!have_header) throw ParseError(source + ": empty document");
    return doc;
}

KeyedText KeyedText::load(const std::filesystem::path& path) {
    return parse(read_file(path), path.string());
}

void KeyedText::save(const std::filesystem::path& path) const { write_file(path, serialize()); }

}  // namespace msd
