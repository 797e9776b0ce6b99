#include "csv.hpp"

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <system_error>

namespace fdc::csv {

std::vector<std::string> split(const std::string& line) {
    std::vector<std::string> out;
    std::size_t start = 0;
    while (true) {
        std::size_t pos = line.find(',', start);
        std::string field = line.substr(start, pos == std::string::npos
                                                   ? std::string::npos
                                                   : pos - start);
        // trim surrounding whitespace
        std::size_t b = field.find_first_not_of(" \t\r");
        std::size_t e = field.find_last_not_of(" \t\r");
        out.push_back(b == std::string::npos ? std::string{}
                                             : field.substr(b, e - b + 1));
        if (pos == std::string::npos) break;
        start = pos + 1;
    }
    return out;
}

double parse_double(const std::string& field, const std::filesystem::path& file,
                    std::size_t row, std::size_t col) {
    double v = 0.0;
    const char* first = field.data();
    const char* last = first + field.size();
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) {
        std::ostringstream msg;
        msg << file.string() << ": row " << row << ", column " << col
            << ": expected a number, got \"" << field << "\"";
        throw std::runtime_error(msg.str());
    }
    return v;
}

std::string format(double v) {
    char buf[32];
    auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
    if (ec != std::errc{}) throw std::runtime_error("csv: number formatting failed");
    return std::string(buf, ptr);
}

Table read_table(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    Table t;
    std::string line;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        auto fields = split(line);
        if (lineno == 1) {
            t.header = std::move(fields);
        } else {
            t.rows.push_back(std::move(fields));
        }
    }
    if (t.header.empty()) throw std::runtime_error(path.string() + ": empty file");
    return t;
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
    if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << contents;
    if (!out) throw std::runtime_error("write failed: " + path.string());
}

}  // namespace fdc::csv
