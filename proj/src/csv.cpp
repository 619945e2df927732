#include "ramanhom/csv.hpp"

#include <cstdio>
#include <sstream>

namespace ramanhom {

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

CsvFile::CsvFile(const std::string& path, const std::vector<std::string>& header)
    : os_(path), columns_(header.size()), path_(path) {
    if (!os_) throw sim_error("cannot open output file " + path);
    for (std::size_t i = 0; i < header.size(); ++i) os_ << (i ? "," : "") << header[i];
    os_ << '\n';
}

void CsvFile::row(const std::vector<double>& values) {
    if (values.size() != columns_) throw sim_error("column count mismatch writing " + path_);
    for (std::size_t i = 0; i < values.size(); ++i)
        os_ << (i ? "," : "") << format_double(values[i]);
    os_ << '\n';
}

void CsvFile::raw_row(const std::string& line) { os_ << line << '\n'; }

std::vector<std::pair<double, double>> read_two_column_csv(std::istream& is,
                                                           const std::string& name) {
    std::vector<std::pair<double, double>> out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(is, line)) {
        ++line_no;
        if (line.empty() || line[0] == '#') continue;
        for (char& c : line)
            if (c == ',' || c == ';' || c == '\t') c = ' ';
        std::istringstream ss(line);
        double a, b;
        if (ss >> a >> b) {
            out.emplace_back(a, b);
        } else if (out.empty() && line_no <= 2) {
            continue;  // header line
        } else {
            throw config_error(name + ":" + std::to_string(line_no) + ": expected two numbers");
        }
    }
    return out;
}

std::vector<std::pair<double, double>> read_two_column_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw config_error("cannot open " + path);
    return read_two_column_csv(is, path);
}

}  // namespace ramanhom
