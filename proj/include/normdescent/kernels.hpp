#pragma once

#include <vector>

#include "normdescent/matrix.hpp"

// Dense product kernels in two flavors: a plain serial reference and an
// OpenMP-parallel version. Both accumulate every output element in the same
// scalar order (ascending inner index, one owner per element), so their
// results are bitwise identical and independent of thread count. The
// dispatching entry points pick a flavor from the configured backend and the
// estimated flop count.
namespace normdescent::kernels {

enum class Backend { serial, parallel, automatic };

void set_backend(Backend b);
Backend backend();

// Caps the number of OpenMP threads the parallel kernels use. 0 means the
// OpenMP default. Thread count never changes results, only speed.
void set_max_threads(int n);
int max_threads();

namespace serial {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_transa(const Matrix& a, const Matrix& b);  // a^T * b
Matrix matmul_transb(const Matrix& a, const Matrix& b);  // a * b^T
Matrix gram_left(const Matrix& g);                       // g * g^T, exactly symmetric
Matrix gram_right(const Matrix& g);                      // g^T * g, exactly symmetric
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x);
}  // namespace serial

namespace par {
Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_transa(const Matrix& a, const Matrix& b);
Matrix matmul_transb(const Matrix& a, const Matrix& b);
Matrix gram_left(const Matrix& g);
Matrix gram_right(const Matrix& g);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x);
}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b);
Matrix matmul_transa(const Matrix& a, const Matrix& b);
Matrix matmul_transb(const Matrix& a, const Matrix& b);
Matrix gram_left(const Matrix& g);
Matrix gram_right(const Matrix& g);
std::vector<double> matvec(const Matrix& a, std::span<const double> x);
std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x);

}  // namespace normdescent::kernels
