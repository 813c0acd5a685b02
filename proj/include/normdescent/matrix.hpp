#pragma once

#include <cstddef>
#include <initializer_list>
#include <span>
#include <vector>

#include "normdescent/errors.hpp"

namespace normdescent {

// Dense row-major matrix of doubles. The validating constructors reject empty
// shapes and non-finite entries; element access itself is unchecked, so code
// that writes through operator() is responsible for keeping entries finite.
class Matrix {
 public:
  Matrix() = default;  // 0x0 placeholder, useful only as an assignment target

  Matrix(std::size_t rows, std::size_t cols);  // zero-filled
  Matrix(std::size_t rows, std::size_t cols, std::vector<double> data);

  static Matrix identity(std::size_t n);
  static Matrix from_rows(std::initializer_list<std::initializer_list<double>> rows);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  std::size_t size() const { return data_.size(); }

  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }

  const double* row(std::size_t r) const { return data_.data() + r * cols_; }
  double* row(std::size_t r) { return data_.data() + r * cols_; }

  std::span<const double> data() const { return data_; }
  std::span<double> data() { return {data_.data(), data_.size()}; }

  bool same_shape(const Matrix& other) const {
    return rows_ == other.rows_ && cols_ == other.cols_;
  }

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

using LayerList = std::vector<Matrix>;

Matrix transpose(const Matrix& m);

Matrix operator+(const Matrix& a, const Matrix& b);
Matrix operator-(const Matrix& a, const Matrix& b);
Matrix operator*(const Matrix& m, double c);
Matrix operator*(double c, const Matrix& m);
bool operator==(const Matrix& a, const Matrix& b);

// Frobenius inner product <a, b>.
double dot(const Matrix& a, const Matrix& b);
double frobenius_norm(const Matrix& m);
double max_abs(const Matrix& m);
double max_abs_diff(const Matrix& a, const Matrix& b);
bool is_zero(const Matrix& m);

// Concatenates all layers into one column vector, layer order then row-major
// within a layer. The flattening used everywhere a layer list is treated as a
// single parameter vector.
Matrix flatten(const LayerList& layers);

// Sum over layers of the Frobenius inner product, accumulated in layer order.
double layers_dot(const LayerList& a, const LayerList& b);

std::size_t total_entries(const LayerList& layers);

void require_same_shapes(const Matrix& a, const Matrix& b, const char* context);
void require_same_shapes(const LayerList& a, const LayerList& b, const char* context);

}  // namespace normdescent
