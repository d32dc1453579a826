#pragma once

#include <string>
#include <vector>

namespace rmpc {

/// Minimal CSV emitter: header row plus numeric rows, full double
/// precision, deterministic formatting.
class CsvWriter {
 public:
  explicit CsvWriter(std::vector<std::string> columns) : columns_(std::move(columns)) {}

  void add_row(const std::vector<double>& row);
  void write(const std::string& path) const;
  std::string to_string() const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<double>> rows_;
};

std::string format_double(double v);

}  // namespace rmpc
