#pragma once

// Minimal CSV reading/writing with a fixed numeric format so identical runs
// serialize to identical bytes.

#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtwin/errors.hpp"

namespace gtwin {

// Shortest representation that survives a double round-trip for our value
// ranges; used for every number we serialize.
inline std::string fmt_g(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.10g", v);
    return buf;
}

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

inline CsvTable read_csv(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot open " + path);
    CsvTable table;
    std::string line;
    bool first = true;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto fields = split_csv_line(line);
        if (first) {
            table.header = std::move(fields);
            first = false;
        } else {
            table.rows.push_back(std::move(fields));
        }
    }
    return table;
}

inline double to_double(const std::string& s, const std::string& context) {
    const char* begin = s.c_str();
    char* end = nullptr;
    double v = std::strtod(begin, &end);
    if (end == begin || (end && *end != '\0'))
        throw ConfigError("not a number in " + context + ": '" + s + "'");
    return v;
}

inline void require_header(const CsvTable& table, const std::string& expected,
                           const std::string& path) {
    std::string got;
    for (std::size_t i = 0; i < table.header.size(); ++i) {
        if (i) got += ',';
        got += table.header[i];
    }
    if (got != expected)
        throw ConfigError("unexpected header in " + path + ": '" + got + "'");
}

class CsvWriter {
  public:
    explicit CsvWriter(const std::string& path) : out_(path, std::ios::binary) {
        if (!out_) throw ConfigError("cannot write " + path);
    }

    void row(const std::vector<std::string>& fields) {
        for (std::size_t i = 0; i < fields.size(); ++i) {
            if (i) out_ << ',';
            out_ << fields[i];
        }
        out_ << '\n';
    }

    void line(const std::string& raw) { out_ << raw << '\n'; }

  private:
    std::ofstream out_;
};

}  // namespace gtwin
