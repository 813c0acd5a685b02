#include "normdescent/kernels.hpp"

#include <atomic>
#include <cstdint>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace normdescent::kernels {

namespace {

std::atomic<Backend> g_backend{Backend::automatic};
std::atomic<int> g_max_threads{0};

// Below this many flops the fork/join overhead dominates any speedup.
constexpr std::size_t kParallelFlopThreshold = std::size_t{1} << 18;

int resolved_threads() {
#ifdef _OPENMP
  int n = omp_get_max_threads();
  int cap = g_max_threads.load(std::memory_order_relaxed);
  if (cap > 0 && cap < n) n = cap;
  return n > 0 ? n : 1;
#else
  return 1;
#endif
}

bool pick_parallel(std::size_t flops) {
  switch (g_backend.load(std::memory_order_relaxed)) {
    case Backend::serial:
      return false;
    case Backend::parallel:
      return true;
    case Backend::automatic:
    default:
      return flops >= kParallelFlopThreshold && resolved_threads() > 1;
  }
}

void require_inner(std::size_t a, std::size_t b, const char* op) {
  if (a != b)
    throw ShapeError(std::string(op) + ": inner dimensions " + std::to_string(a) +
                     " and " + std::to_string(b) + " differ");
}

}  // namespace

void set_backend(Backend b) { g_backend.store(b, std::memory_order_relaxed); }
Backend backend() { return g_backend.load(std::memory_order_relaxed); }
void set_max_threads(int n) { g_max_threads.store(n < 0 ? 0 : n, std::memory_order_relaxed); }
int max_threads() { return g_max_threads.load(std::memory_order_relaxed); }

// One row of C = A*B, accumulated in ascending k so serial and parallel paths
// agree bitwise.
static inline void matmul_row(const Matrix& a, const Matrix& b, Matrix& c, std::size_t i) {
  double* ci = c.row(i);
  for (std::size_t k = 0; k < a.cols(); ++k) {
    const double aik = a(i, k);
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aik * bk[j];
  }
}

// One row of C = A^T*B (row i of the result is column i of A against B).
static inline void matmul_transa_row(const Matrix& a, const Matrix& b, Matrix& c,
                                     std::size_t i) {
  double* ci = c.row(i);
  for (std::size_t k = 0; k < a.rows(); ++k) {
    const double aki = a(k, i);
    const double* bk = b.row(k);
    for (std::size_t j = 0; j < b.cols(); ++j) ci[j] += aki * bk[j];
  }
}

static inline double row_dot(const Matrix& a, std::size_t i, const Matrix& b,
                             std::size_t j) {
  const double* ai = a.row(i);
  const double* bj = b.row(j);
  double acc = 0.0;
  for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * bj[k];
  return acc;
}

namespace serial {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) matmul_row(a, b, c, i);
  return c;
}

Matrix matmul_transa(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows(), "matmul_transa");
  Matrix c(a.cols(), b.cols());
  for (std::size_t i = 0; i < a.cols(); ++i) matmul_transa_row(a, b, c, i);
  return c;
}

Matrix matmul_transb(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.cols(), "matmul_transb");
  Matrix c(a.rows(), b.rows());
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < b.rows(); ++j) c(i, j) = row_dot(a, i, b, j);
  return c;
}

Matrix gram_left(const Matrix& g) {
  Matrix c(g.rows(), g.rows());
  for (std::size_t i = 0; i < g.rows(); ++i)
    for (std::size_t j = 0; j <= i; ++j) {
      double v = row_dot(g, i, g, j);
      c(i, j) = v;
      c(j, i) = v;
    }
  return c;
}

Matrix gram_right(const Matrix& g) { return gram_left(normdescent::transpose(g)); }

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  require_inner(a.cols(), x.size(), "matvec");
  std::vector<double> y(a.rows(), 0.0);
  for (std::size_t i = 0; i < a.rows(); ++i) {
    const double* ai = a.row(i);
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * x[k];
    y[i] = acc;
  }
  return y;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
  require_inner(a.rows(), x.size(), "matvec_transposed");
  std::vector<double> y(a.cols(), 0.0);
  for (std::size_t j = 0; j < a.cols(); ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.rows(); ++k) acc += a(k, j) * x[k];
    y[j] = acc;
  }
  return y;
}

}  // namespace serial

namespace par {

Matrix matmul(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.rows(), "matmul");
  Matrix c(a.rows(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t i = 0; i < m; ++i) matmul_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix matmul_transa(const Matrix& a, const Matrix& b) {
  require_inner(a.rows(), b.rows(), "matmul_transa");
  Matrix c(a.cols(), b.cols());
  const std::int64_t m = static_cast<std::int64_t>(a.cols());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t i = 0; i < m; ++i)
    matmul_transa_row(a, b, c, static_cast<std::size_t>(i));
  return c;
}

Matrix matmul_transb(const Matrix& a, const Matrix& b) {
  require_inner(a.cols(), b.cols(), "matmul_transb");
  Matrix c(a.rows(), b.rows());
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < b.rows(); ++j)
      c(static_cast<std::size_t>(i), j) = row_dot(a, static_cast<std::size_t>(i), b, j);
  return c;
}

Matrix gram_left(const Matrix& g) {
  Matrix c(g.rows(), g.rows());
  const std::int64_t m = static_cast<std::int64_t>(g.rows());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j <= static_cast<std::size_t>(i); ++j) {
      double v = row_dot(g, static_cast<std::size_t>(i), g, j);
      c(static_cast<std::size_t>(i), j) = v;
      c(j, static_cast<std::size_t>(i)) = v;
    }
  return c;
}

Matrix gram_right(const Matrix& g) { return gram_left(normdescent::transpose(g)); }

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  require_inner(a.cols(), x.size(), "matvec");
  std::vector<double> y(a.rows(), 0.0);
  const std::int64_t m = static_cast<std::int64_t>(a.rows());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t i = 0; i < m; ++i) {
    const double* ai = a.row(static_cast<std::size_t>(i));
    double acc = 0.0;
    for (std::size_t k = 0; k < a.cols(); ++k) acc += ai[k] * x[k];
    y[static_cast<std::size_t>(i)] = acc;
  }
  return y;
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
  require_inner(a.rows(), x.size(), "matvec_transposed");
  std::vector<double> y(a.cols(), 0.0);
  const std::int64_t n = static_cast<std::int64_t>(a.cols());
#ifdef _OPENMP
#pragma omp parallel for num_threads(resolved_threads()) schedule(static)
#endif
  for (std::int64_t j = 0; j < n; ++j) {
    double acc = 0.0;
    for (std::size_t k = 0; k < a.rows(); ++k)
      acc += a(k, static_cast<std::size_t>(j)) * x[k];
    y[static_cast<std::size_t>(j)] = acc;
  }
  return y;
}

}  // namespace par

Matrix matmul(const Matrix& a, const Matrix& b) {
  return pick_parallel(2 * a.rows() * a.cols() * b.cols()) ? par::matmul(a, b)
                                                           : serial::matmul(a, b);
}

Matrix matmul_transa(const Matrix& a, const Matrix& b) {
  return pick_parallel(2 * a.cols() * a.rows() * b.cols()) ? par::matmul_transa(a, b)
                                                           : serial::matmul_transa(a, b);
}

Matrix matmul_transb(const Matrix& a, const Matrix& b) {
  return pick_parallel(2 * a.rows() * a.cols() * b.rows()) ? par::matmul_transb(a, b)
                                                           : serial::matmul_transb(a, b);
}

Matrix gram_left(const Matrix& g) {
  return pick_parallel(g.rows() * g.rows() * g.cols()) ? par::gram_left(g)
                                                       : serial::gram_left(g);
}

Matrix gram_right(const Matrix& g) {
  return pick_parallel(g.cols() * g.cols() * g.rows()) ? par::gram_right(g)
                                                       : serial::gram_right(g);
}

std::vector<double> matvec(const Matrix& a, std::span<const double> x) {
  return pick_parallel(2 * a.rows() * a.cols()) ? par::matvec(a, x) : serial::matvec(a, x);
}

std::vector<double> matvec_transposed(const Matrix& a, std::span<const double> x) {
  return pick_parallel(2 * a.rows() * a.cols()) ? par::matvec_transposed(a, x)
                                                : serial::matvec_transposed(a, x);
}

}  // namespace normdescent::kernels
