#pragma once

#include <cstdio>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wavedecay/wave.hpp"

namespace wavedecay {

inline std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

/// Comma-separated table with a single header row; values carry 17
/// significant digits so regression re-runs round-trip exactly.  Columns are
/// passed column-major and must share one length (possibly zero, giving a
/// header-only table).
inline void write_csv(const std::string& path, const std::vector<std::string>& header,
                      const std::vector<std::vector<double>>& columns) {
  if (header.size() != columns.size())
    throw std::invalid_argument("write_csv: header/column count mismatch");
  for (const auto& col : columns)
    if (col.size() != columns.front().size())
      throw std::invalid_argument("write_csv: ragged columns");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path);
  for (std::size_t c = 0; c < header.size(); ++c) {
    if (c) out << ',';
    out << header[c];
  }
  out << '\n';
  const std::size_t rows = columns.empty() ? 0 : columns.front().size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < columns.size(); ++c) {
      if (c) out << ',';
      out << format_double(columns[c][r]);
    }
    out << '\n';
  }
  if (!out) throw std::runtime_error("write failed for " + path);
}

/// Kernel matrix file: one header line holding N, then N rows of N
/// comma-separated reals.
inline KernelSpec read_kernel_matrix(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read kernel matrix " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("kernel matrix " + path + ": empty file");
  int n = 0;
  try {
    n = std::stoi(line);
  } catch (...) {
    throw std::runtime_error("kernel matrix " + path + ": bad header line");
  }
  if (n < 1) throw std::runtime_error("kernel matrix " + path + ": header must be >= 1");

  std::vector<double> entries;
  entries.reserve(static_cast<std::size_t>(n) * n);
  for (int r = 0; r < n; ++r) {
    if (!std::getline(in, line))
      throw std::runtime_error("kernel matrix " + path + ": missing row " + std::to_string(r + 1));
    std::stringstream ss(line);
    std::string cell;
    int cols = 0;
    while (std::getline(ss, cell, ',')) {
      try {
        entries.push_back(std::stod(cell));
      } catch (...) {
        throw std::runtime_error("kernel matrix " + path + ": bad entry in row " +
                                 std::to_string(r + 1));
      }
      ++cols;
    }
    if (cols != n)
      throw std::runtime_error("kernel matrix " + path + ": row " + std::to_string(r + 1) +
                               " has " + std::to_string(cols) + " entries, expected " +
                               std::to_string(n));
  }
  return KernelSpec::dense(n, std::move(entries));
}

}  // namespace wavedecay
