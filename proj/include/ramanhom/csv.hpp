#pragma once

#include <fstream>
#include <string>
#include <utility>
#include <vector>

#include "ramanhom/errors.hpp"

namespace ramanhom {

// Shortest round-trippable decimal form; keeps identical scenarios
// byte-identical across runs.
std::string format_double(double v);

// Deterministic CSV writer for the CLI outputs.
class CsvFile {
  public:
    CsvFile(const std::string& path, const std::vector<std::string>& header);

    void row(const std::vector<double>& values);
    void raw_row(const std::string& line);

  private:
    std::ofstream os_;
    std::size_t columns_;
    std::string path_;
};

// Two-column (value, value) reader: comments (#) and an optional non-numeric
// header line are skipped; separator is comma or whitespace.
std::vector<std::pair<double, double>> read_two_column_csv(std::istream& is,
                                                           const std::string& name);
std::vector<std::pair<double, double>> read_two_column_csv(const std::string& path);

}  // namespace ramanhom
