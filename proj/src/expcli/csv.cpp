#include "bnnfilt/expcli/csv.hpp"

#include <charconv>
#include <fstream>
#include <stdexcept>

#include "bnnfilt/common.hpp"

namespace bnnfilt::expcli {

std::string cell(double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return {buf, res.ptr};
}

std::string cell(std::size_t v) { return std::to_string(v); }
std::string cell(bool v) { return v ? "1" : "0"; }

CsvTable::CsvTable(std::vector<std::string> columns) : columns_(std::move(columns)) {}

void CsvTable::add_row(std::vector<std::string> row) {
  check_dims("CSV row width", columns_.size(), row.size());
  rows_.push_back(std::move(row));
}

std::string CsvTable::str() const {
  std::string out;
  for (const auto& c : comments_) out += "# " + c + "\n";
  auto line = [&out](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) out += (i ? "," : "") + cells[i];
    out += "\n";
  };
  line(columns_);
  for (const auto& r : rows_) line(r);
  return out;
}

void CsvTable::write(const std::filesystem::path& path) const {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write " + path.string());
  f << str();
}

}  // namespace bnnfilt::expcli
