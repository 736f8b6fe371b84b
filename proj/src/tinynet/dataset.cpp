#include "bnnfilt/tinynet/dataset.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>
#include <string_view>

#include "bnnfilt/rng.hpp"

namespace bnnfilt::tinynet {

std::size_t train_count(std::size_t n, double test_fraction) {
  if (!(test_fraction >= 0.0 && test_fraction < 1.0)) throw std::domain_error("test fraction must lie in [0, 1)");
  return static_cast<std::size_t>(std::llround(static_cast<double>(n) * (1.0 - test_fraction)));
}

namespace {

void split_into(Dataset& d, const Matrix& x, const std::vector<int>& y, std::size_t n_train) {
  const std::size_t n = x.rows;
  std::vector<std::size_t> train_rows(n_train), test_rows(n - n_train);
  std::iota(train_rows.begin(), train_rows.end(), std::size_t{0});
  std::iota(test_rows.begin(), test_rows.end(), n_train);
  d.train_x = gather_rows(x, train_rows);
  d.test_x = gather_rows(x, test_rows);
  d.train_y.assign(y.begin(), y.begin() + static_cast<std::ptrdiff_t>(n_train));
  d.test_y.assign(y.begin() + static_cast<std::ptrdiff_t>(n_train), y.end());
}

std::vector<std::string_view> split_line(std::string_view line) {
  std::vector<std::string_view> cells;
  std::size_t start = 0;
  while (true) {
    const auto comma = line.find(',', start);
    cells.push_back(line.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return cells;
}

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

void append_number(std::string& out, double v) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  out.append(buf, res.ptr);
}

}  // namespace

Dataset make_blobs(std::size_t n_per_class, std::size_t n_classes, std::size_t dim, double noise_sigma,
                   std::uint64_t seed) {
  if (n_per_class == 0 || n_classes == 0 || dim == 0) throw std::invalid_argument("make_blobs: counts must be positive");
  Rng rng(seed);
  Matrix centers(n_classes, dim);
  for (std::size_t c = 0; c < n_classes; ++c) {
    double norm = 0.0;
    do {
      norm = 0.0;
      for (auto& v : centers.row(c)) {
        v = rng.normal();
        norm += v * v;
      }
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (auto& v : centers.row(c)) v /= norm;
  }

  const std::size_t n = n_per_class * n_classes;
  Matrix x(n, dim);
  std::vector<int> y(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t c = i / n_per_class;
    y[i] = static_cast<int>(c);
    for (std::size_t j = 0; j < dim; ++j) x(i, j) = centers(c, j) + noise_sigma * rng.normal();
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  rng.shuffle(order);
  Matrix xs = gather_rows(x, order);
  std::vector<int> ys(n);
  for (std::size_t i = 0; i < n; ++i) ys[i] = y[order[i]];

  Dataset d;
  d.n_classes = n_classes;
  d.source = DataSource::synthetic_blobs;
  split_into(d, xs, ys, train_count(n, 0.2));
  return d;
}

Dataset load_csv(const std::filesystem::path& path, const std::string& label_column, double test_fraction) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open CSV file '" + path.string() + "'");

  std::string line;
  if (!std::getline(in, line)) throw CsvError("missing header row", 1, 1);
  const auto header = split_line(line);
  std::size_t label_idx = header.size();
  for (std::size_t c = 0; c < header.size(); ++c)
    if (trim(header[c]) == label_column) label_idx = c;
  if (label_idx == header.size()) throw CsvError("label column '" + label_column + "' not in header", 1, 1);
  const std::size_t dim = header.size() - 1;

  std::vector<double> values;
  std::vector<int> labels;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (trim(line).empty()) continue;
    const auto cells = split_line(line);
    if (cells.size() != header.size())
      throw CsvError("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(cells.size()),
                     row, std::min(cells.size(), header.size()) + 1);
    for (std::size_t c = 0; c < cells.size(); ++c) {
      const auto cell = trim(cells[c]);
      if (c == label_idx) {
        int v = 0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size() || v < 0)
          throw CsvError("label '" + std::string(cell) + "' is not a non-negative integer", row, c + 1);
        labels.push_back(v);
      } else {
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
          throw CsvError("non-numeric cell '" + std::string(cell) + "'", row, c + 1);
        values.push_back(v);
      }
    }
  }

  Matrix x(labels.size(), dim);
  x.data = std::move(values);
  Dataset d;
  d.source = DataSource::csv;
  d.n_classes = labels.empty() ? 0 : static_cast<std::size_t>(*std::max_element(labels.begin(), labels.end())) + 1;
  split_into(d, x, labels, train_count(labels.size(), test_fraction));
  return d;
}

void save_csv(const std::filesystem::path& path, const Dataset& data, const std::string& label_column) {
  std::string out;
  for (std::size_t j = 0; j < data.dim(); ++j) out += "x" + std::to_string(j) + ",";
  out += label_column + "\n";
  auto emit = [&](const Matrix& x, const std::vector<int>& y) {
    for (std::size_t r = 0; r < x.rows; ++r) {
      for (std::size_t j = 0; j < x.cols; ++j) {
        append_number(out, x(r, j));
        out += ',';
      }
      out += std::to_string(y[r]) + "\n";
    }
  };
  emit(data.train_x, data.train_y);
  emit(data.test_x, data.test_y);
  std::ofstream f(path, std::ios::binary);
  if (!f) throw std::runtime_error("cannot write CSV file '" + path.string() + "'");
  f << out;
}

}  // namespace bnnfilt::tinynet
