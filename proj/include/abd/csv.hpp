#pragma once

#include <cstdio>
#include <string>
#include <vector>

namespace abd {

/// %.17g formatting: enough digits to round-trip a double exactly.
inline std::string fmt17(double x) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", x);
    return buf;
}

/// Split one CSV line on commas (no quoting; our files never need it).
std::vector<std::string> csv_split(const std::string& line);

struct CsvTable {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

/// Parse a comma-separated file with a header row and LF line endings.
CsvTable csv_read_file(const std::string& path);

}  // namespace abd
