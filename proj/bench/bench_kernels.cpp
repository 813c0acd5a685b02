// Times the serial reference kernels against the OpenMP versions and reports
// the max absolute difference between their outputs, which must print as 0.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <string>
#include <vector>

#include "normdescent/kernels.hpp"
#include "normdescent/linalg.hpp"
#include "normdescent/matrix.hpp"
#include "normdescent/rng.hpp"

using namespace normdescent;

namespace {

Matrix gaussian(std::size_t rows, std::size_t cols, Rng& rng) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

double time_ms(const std::function<void()>& fn, int reps) {
  const auto start = std::chrono::steady_clock::now();
  for (int r = 0; r < reps; ++r) fn();
  const auto stop = std::chrono::steady_clock::now();
  return std::chrono::duration<double, std::milli>(stop - start).count() / reps;
}

void report(const std::string& label, std::size_t n, double serial_ms,
            double parallel_ms, double diff) {
  std::printf("%-16s %4zu  serial %9.3f ms  parallel %9.3f ms  speedup %5.2fx  "
              "max_abs_diff %g\n",
              label.c_str(), n, serial_ms, parallel_ms,
              parallel_ms > 0.0 ? serial_ms / parallel_ms : 0.0, diff);
}

}  // namespace

int main() {
  Rng rng(2026);
  std::printf("kernel            n     timings (avg over reps)\n");
  for (std::size_t n : {64, 128, 256, 384}) {
    const int reps = n <= 128 ? 20 : 5;
    Matrix a = gaussian(n, n, rng);
    Matrix b = gaussian(n, n, rng);

    Matrix serial_out = kernels::serial::matmul(a, b);
    Matrix par_out = kernels::par::matmul(a, b);
    report("matmul", n, time_ms([&] { kernels::serial::matmul(a, b); }, reps),
           time_ms([&] { kernels::par::matmul(a, b); }, reps),
           max_abs_diff(serial_out, par_out));

    Matrix rect = gaussian(n, n / 2, rng);
    Matrix gram_serial = kernels::serial::gram_right(rect);
    Matrix gram_par = kernels::par::gram_right(rect);
    report("gram_right", n,
           time_ms([&] { kernels::serial::gram_right(rect); }, reps),
           time_ms([&] { kernels::par::gram_right(rect); }, reps),
           max_abs_diff(gram_serial, gram_par));
  }

  // End-to-end effect on an SVD-sized workload: orthogonalization by
  // Newton-Schulz iteration is matmul-bound.
  for (std::size_t n : {128, 256}) {
    Matrix g = gaussian(n, n, rng);
    kernels::set_backend(kernels::Backend::serial);
    Matrix serial_out = orthogonalize_newton_schulz(g, PolynomialSpec::default_cubic());
    const double serial_ms = time_ms(
        [&] { orthogonalize_newton_schulz(g, PolynomialSpec::default_cubic()); }, 3);
    kernels::set_backend(kernels::Backend::parallel);
    Matrix par_out = orthogonalize_newton_schulz(g, PolynomialSpec::default_cubic());
    const double par_ms = time_ms(
        [&] { orthogonalize_newton_schulz(g, PolynomialSpec::default_cubic()); }, 3);
    kernels::set_backend(kernels::Backend::automatic);
    report("orthogonalize", n, serial_ms, par_ms, max_abs_diff(serial_out, par_out));
  }
  return 0;
}
