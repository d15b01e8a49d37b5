#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

namespace slabtherm {

/// Failure to create, write or read an output file.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Comma-separated table: '#' preamble lines, one header row, numeric rows.
struct Table {
  std::vector<std::string> preamble;  ///< written as "# <line>"
  std::vector<std::string> columns;
  std::vector<std::vector<double>> rows;
};

/// Every value is written with 17 significant digits; NaN as "nan".
std::string render_table(const Table& table);
Table parse_table(const std::string& text);

void ensure_directory(const std::filesystem::path& dir);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);
void write_table(const std::filesystem::path& path, const Table& table);
Table read_table(const std::filesystem::path& path);

}  // namespace slabtherm
