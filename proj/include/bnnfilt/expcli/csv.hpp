#pragma once

#include <cstddef>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

namespace bnnfilt::expcli {

/// Formats a number in shortest round-trip form.
std::string cell(double v);
std::string cell(std::size_t v);
std::string cell(bool v);

/// A CSV table written as optional `# ` comment lines, a header row and data rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);

  void add_comment(std::string line) { comments_.push_back(std::move(line)); }
  void add_row(std::vector<std::string> row);

  const std::vector<std::string>& columns() const { return columns_; }
  const std::vector<std::vector<std::string>>& rows() const { return rows_; }

  std::string str() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::string> comments_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace bnnfilt::expcli
