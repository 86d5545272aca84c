#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <vector>

#include "infkyle/error.hpp"

namespace infkyle::csv {

/// Shortest round-trip decimal form; independent of the C++ locale.
inline std::string format(double v) {
    char buf[64];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw Error("csv", "number formatting failed");
    return std::string(buf, ptr);
}

inline std::string format(long long v) { return std::to_string(v); }

inline double parse_double(std::string_view s, const std::string& context) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    if (!s.empty() && s.front() == '+') s.remove_prefix(1);
    double v = 0.0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw Error("csv", "cannot parse number '" + std::string(s) + "' in " + context);
    return v;
}

inline std::vector<std::string> split(std::string_view line, char delim = ',') {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        const auto pos = line.find(delim, start);
        out.emplace_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    for (auto& s : out) {
        while (!s.empty() && (s.back() == '\r' || s.back() == ' ')) s.pop_back();
        while (!s.empty() && s.front() == ' ') s.erase(s.begin());
    }
    return out;
}

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

/// Reads a numeric CSV with one header row. Lines starting with '#' are skipped.
inline Table read(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("csv", "cannot open '" + path + "'");
    Table t;
    std::string line;
    bool have_header = false;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        auto fields = split(line);
        if (!have_header) {
            t.header = std::move(fields);
            have_header = true;
            continue;
        }
        if (fields.size() != t.header.size())
            throw Error("csv", path + ":" + std::to_string(lineno) + ": expected " +
                                   std::to_string(t.header.size()) + " fields");
        std::vector<double> row;
        row.reserve(fields.size());
        for (const auto& f : fields) row.push_back(parse_double(f, path + ":" + std::to_string(lineno)));
        t.rows.push_back(std::move(row));
    }
    if (!have_header) throw Error("csv", "'" + path + "' has no header row");
    return t;
}

class Writer {
  public:
    explicit Writer(const std::string& path) : out_(path, std::ios::binary), path_(path) {
        if (!out_) throw Error("csv", "cannot write '" + path + "'");
    }

    void comment(const std::string& text) { out_ << "# " << text << '\n'; }

    void header(const std::vector<std::string>& cols) { line(cols); }

    template <class... Ts>
    void row(const Ts&... vals) {
        bool first = true;
        ((out_ << (first ? "" : ",") << cell(vals), first = false), ...);
        out_ << '\n';
    }

    void row(const std::vector<double>& vals) {
        for (std::size_t i = 0; i < vals.size(); ++i) out_ << (i ? "," : "") << format(vals[i]);
        out_ << '\n';
    }

    void line(const std::vector<std::string>& cells) {
        for (std::size_t i = 0; i < cells.size(); ++i) out_ << (i ? "," : "") << cells[i];
        out_ << '\n';
    }

    ~Writer() { out_.flush(); }

  private:
    static std::string cell(double v) { return format(v); }
    static std::string cell(int v) { return std::to_string(v); }
    static std::string cell(long v) { return std::to_string(v); }
    static std::string cell(long long v) { return std::to_string(v); }
    static std::string cell(unsigned v) { return std::to_string(v); }
    static std::string cell(unsigned long v) { return std::to_string(v); }
    static std::string cell(unsigned long long v) { return std::to_string(v); }
    static std::string cell(const std::string& v) { return v; }
    static std::string cell(const char* v) { return v; }

    std::ofstream out_;
    std::string path_;
};

}  // namespace infkyle::csv
