#include "abd/csv.hpp"

#include <fstream>

#include "abd/errors.hpp"

namespace abd {

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur.push_back(ch);
        }
    }
    out.push_back(cur);
    return out;
}

CsvTable csv_read_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ValidationError("cannot open file: " + path);
    CsvTable table;
    std::string line;
    if (!std::getline(in, line)) throw ValidationError("empty file: " + path);
    table.header = csv_split(line);
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        table.rows.push_back(csv_split(line));
    }
    return table;
}

}  // namespace abd
