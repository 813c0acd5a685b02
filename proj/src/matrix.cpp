#include "normdescent/matrix.hpp"

#include <cmath>
#include <string>

namespace normdescent {

namespace {

void require_positive_shape(std::size_t rows, std::size_t cols) {
  if (rows == 0 || cols == 0)
    throw ValidationError("matrix dimensions must be positive, got " +
                          std::to_string(rows) + "x" + std::to_string(cols));
}

void require_finite(std::span<const double> data) {
  for (double v : data)
    if (!std::isfinite(v)) throw ValidationError("matrix entries must be finite");
}

}  // namespace

Matrix::Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols) {
  require_positive_shape(rows, cols);
  data_.assign(rows * cols, 0.0);
}

Matrix::Matrix(std::size_t rows, std::size_t cols, std::vector<double> data)
    : rows_(rows), cols_(cols), data_(std::move(data)) {
  require_positive_shape(rows, cols);
  if (data_.size() != rows * cols)
    throw ShapeError("matrix data size " + std::to_string(data_.size()) +
                     " does not match shape " + std::to_string(rows) + "x" +
                     std::to_string(cols));
  require_finite(data_);
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::from_rows(std::initializer_list<std::initializer_list<double>> rows) {
  std::size_t r = rows.size();
  if (r == 0) throw ValidationError("matrix needs at least one row");
  std::size_t c = rows.begin()->size();
  std::vector<double> data;
  data.reserve(r * c);
  for (const auto& row : rows) {
    if (row.size() != c) throw ShapeError("ragged rows in matrix literal");
    data.insert(data.end(), row.begin(), row.end());
  }
  return Matrix(r, c, std::move(data));
}

Matrix transpose(const Matrix& m) {
  Matrix t(m.cols(), m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i)
    for (std::size_t j = 0; j < m.cols(); ++j) t(j, i) = m(i, j);
  return t;
}

namespace {

void require_shape_match(const Matrix& a, const Matrix& b, const char* op) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(op) + ": shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) +
                     "x" + std::to_string(b.cols()) + " differ");
}

}  // namespace

Matrix operator+(const Matrix& a, const Matrix& b) {
  require_shape_match(a, b, "add");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] + b.data()[i];
  return c;
}

Matrix operator-(const Matrix& a, const Matrix& b) {
  require_shape_match(a, b, "subtract");
  Matrix c(a.rows(), a.cols());
  for (std::size_t i = 0; i < a.size(); ++i) c.data()[i] = a.data()[i] - b.data()[i];
  return c;
}

Matrix operator*(const Matrix& m, double c) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < m.size(); ++i) out.data()[i] = m.data()[i] * c;
  return out;
}

Matrix operator*(double c, const Matrix& m) { return m * c; }

bool operator==(const Matrix& a, const Matrix& b) {
  if (!a.same_shape(b)) return false;
  for (std::size_t i = 0; i < a.size(); ++i)
    if (a.data()[i] != b.data()[i]) return false;
  return true;
}

double dot(const Matrix& a, const Matrix& b) {
  require_shape_match(a, b, "dot");
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a.data()[i] * b.data()[i];
  return acc;
}

double frobenius_norm(const Matrix& m) {
  double acc = 0.0;
  for (double v : m.data()) acc += v * v;
  return std::sqrt(acc);
}

double max_abs(const Matrix& m) {
  double best = 0.0;
  for (double v : m.data()) best = std::max(best, std::abs(v));
  return best;
}

double max_abs_diff(const Matrix& a, const Matrix& b) {
  require_shape_match(a, b, "max_abs_diff");
  double best = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i)
    best = std::max(best, std::abs(a.data()[i] - b.data()[i]));
  return best;
}

bool is_zero(const Matrix& m) { return max_abs(m) == 0.0; }

Matrix flatten(const LayerList& layers) {
  if (layers.empty()) throw ValidationError("flatten: empty layer list");
  std::vector<double> data;
  data.reserve(total_entries(layers));
  for (const Matrix& layer : layers)
    data.insert(data.end(), layer.data().begin(), layer.data().end());
  const std::size_t n = data.size();
  return Matrix(n, 1, std::move(data));
}

double layers_dot(const LayerList& a, const LayerList& b) {
  require_same_shapes(a, b, "layers_dot");
  double acc = 0.0;
  for (std::size_t l = 0; l < a.size(); ++l) acc += dot(a[l], b[l]);
  return acc;
}

std::size_t total_entries(const LayerList& layers) {
  std::size_t n = 0;
  for (const Matrix& layer : layers) n += layer.size();
  return n;
}

void require_same_shapes(const Matrix& a, const Matrix& b, const char* context) {
  if (!a.same_shape(b))
    throw ShapeError(std::string(context) + ": shapes " + std::to_string(a.rows()) + "x" +
                     std::to_string(a.cols()) + " and " + std::to_string(b.rows()) + "x" +
                     std::to_string(b.cols()) + " differ");
}

void require_same_shapes(const LayerList& a, const LayerList& b, const char* context) {
  if (a.size() != b.size())
    throw ShapeError(std::string(context) + ": layer counts " + std::to_string(a.size()) +
                     " and " + std::to_string(b.size()) + " differ");
  for (std::size_t l = 0; l < a.size(); ++l)
    if (!a[l].same_shape(b[l]))
      throw ShapeError(std::string(context) + ": layer " + std::to_string(l) +
                       " shapes differ");
}

}  // namespace normdescent
