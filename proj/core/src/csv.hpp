#ifndef FDCLUSTER_SRC_CSV_HPP_
#define FDCLUSTER_SRC_CSV_HPP_

// Internal CSV plumbing shared by the exporters/loaders. Not installed.

#include <filesystem>
#include <string>
#include <vector>

namespace fdc::csv {

std::vector<std::string> split(const std::string& line);

// Throws std::runtime_error naming the file and 1-based row/column on bad
// numeric fields.
double parse_double(const std::string& field, const std::filesystem::path& file,
                    std::size_t row, std::size_t col);

// Shortest representation that round-trips through parsing.
std::string format(double v);

struct Table {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};

Table read_table(const std::filesystem::path& path);

void write_file(const std::filesystem::path& path, const std::string& contents);

}  // namespace fdc::csv

#endif  // FDCLUSTER_SRC_CSV_HPP_
