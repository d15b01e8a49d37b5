#include "slabtherm/io.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <system_error>

#include "slabtherm/config.hpp"

namespace slabtherm {

std::string render_table(const Table& table) {
  std::string out;
  for (const auto& line : table.preamble) out += "# " + line + '\n';
  for (std::size_t c = 0; c < table.columns.size(); ++c) out += (c ? "," : "") + table.columns[c];
  out += '\n';
  for (const auto& row : table.rows) {
    if (row.size() != table.columns.size()) throw std::invalid_argument("render_table: row width mismatch");
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c) out += ',';
      out += std::isnan(row[c]) ? std::string("nan") : format_number(row[c]);
    }
    out += '\n';
  }
  return out;
}

Table parse_table(const std::string& text) {
  Table t;
  std::istringstream in(text);
  std::string line;
  bool header = false;
  while (std::getline(in, line)) {
    if (line.rfind("# ", 0) == 0 && !header) {
      t.preamble.push_back(line.substr(2));
      continue;
    }
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!header) {
      t.columns = cells;
      header = true;
      continue;
    }
    std::vector<double> row;
    for (const auto& c : cells) row.push_back(c == "nan" ? std::nan("") : std::stod(c));
    t.rows.push_back(std::move(row));
  }
  return t;
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir))
    throw IoError("cannot create directory '" + dir.string() + "': " + ec.message());
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << text;
  out.flush();
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_table(const std::filesystem::path& path, const Table& table) { write_text(path, render_table(table)); }

Table read_table(const std::filesystem::path& path) { return parse_table(read_text(path)); }

}  // namespace slabtherm
