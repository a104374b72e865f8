#pragma once

#include <cstddef>
#include <span>
#include <vector>

namespace wmlab {

// Row-major dense matrix of doubles; the only matrix shape this project needs.
struct Matrix
{
  int rows = 0;
  int cols = 0;
  std::vector<double> data;

  Matrix() = default;
  Matrix(int r, int c) : rows(r), cols(c), data(std::size_t(r) * std::size_t(c), 0.0) {}

  double& at(int r, int c) { return data[std::size_t(r) * cols + c]; }
  double at(int r, int c) const { return data[std::size_t(r) * cols + c]; }

  std::span<double> row(int r) { return {data.data() + std::size_t(r) * cols, std::size_t(cols)}; }
  std::span<const double> row(int r) const { return {data.data() + std::size_t(r) * cols, std::size_t(cols)}; }

  bool empty() const { return rows == 0 || cols == 0; }
};

} // namespace wmlab
