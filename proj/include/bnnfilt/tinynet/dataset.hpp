#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "bnnfilt/tinynet/matrix.hpp"

namespace bnnfilt::tinynet {

enum class DataSource { synthetic_blobs, csv };

struct Dataset {
  Matrix train_x;
  std::vector<int> train_y;
  Matrix test_x;
  std::vector<int> test_y;
  std::size_t n_classes = 0;
  DataSource source = DataSource::synthetic_blobs;

  std::size_t dim() const { return train_x.cols; }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

/// Rows assigned to the training split when the trailing `test_fraction`
/// of `n` rows is held out.
std::size_t train_count(std::size_t n, double test_fraction);

/// Gaussian clusters around random unit-norm centers, `n_per_class` points
/// each, shuffled and split 80/20. Bitwise deterministic per seed.
Dataset make_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t dim, double noise_sigma,
                   std::uint64_t seed);

class CsvError : public std::runtime_error {
 public:
  CsvError(const std::string& what, std::size_t row, std::size_t column)
      : std::runtime_error(what + " (row " + std::to_string(row) + ", column " + std::to_string(column) + ")"),
        row_(row),
        column_(column) {}
  std::size_t row() const { return row_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t row_;
  std::size_t column_;
};

/// Reads a header-led comma-separated file. Every column except
/// `label_column` is a numeric feature; the label column holds non-negative
/// integers. Row order is preserved and the trailing `test_fraction` of rows
/// becomes the test split. Rows and columns in errors are 1-based, the
/// header being row 1.
Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, double test_fraction = 0.2);

/// Writes train rows then test rows in the format load_csv reads, with
/// shortest round-trip number formatting.
void save_csv(const std::filesystem::path& path, const Dataset& data, const std::string& label_column = "label");

}  // namespace bnnfilt::tinynet
