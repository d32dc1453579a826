#include "rmpc/csv.hpp"

#include <cassert>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>

namespace rmpc {

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void CsvWriter::add_row(const std::vector<double>& row) {
  assert(row.size() == columns_.size());
  rows_.push_back(row);
}

std::string CsvWriter::to_string() const {
  std::ostringstream out;
  for (std::size_t i = 0; i < columns_.size(); ++i)
    out << columns_[i] << (i + 1 < columns_.size() ? "," : "\n");
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i)
      out << format_double(row[i]) << (i + 1 < row.size() ? "," : "\n");
  }
  return out.str();
}

void CsvWriter::write(const std::string& path) const {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << to_string();
}

}  // namespace rmpc
