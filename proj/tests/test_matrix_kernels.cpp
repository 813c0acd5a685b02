#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normdescent/kernels.hpp"
#include "normdescent/matrix.hpp"
#include "normdescent/rng.hpp"
#include "oracles.hpp"

using namespace normdescent;

TEST_CASE("matrix constructors validate shape and content") {
  CHECK_THROWS_AS(Matrix(0, 3), ValidationError);
  CHECK_THROWS_AS(Matrix(3, 0), ValidationError);
  CHECK_THROWS_AS(Matrix(2, 2, {1.0, 2.0, 3.0}), ShapeError);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, 1.0 / 0.0}), ValidationError);
  CHECK_THROWS_AS(Matrix(1, 2, {1.0, std::nan("")}), ValidationError);
  CHECK_THROWS_AS(Matrix::from_rows({{1.0, 2.0}, {3.0}}), ShapeError);

  Matrix m = Matrix::from_rows({{1.0, -5.0}, {2.0, 3.0}});
  CHECK(m.rows() == 2);
  CHECK(m.cols() == 2);
  CHECK(m(0, 1) == -5.0);
  CHECK(m.row(1)[0] == 2.0);

  Matrix z(3, 2);
  CHECK(is_zero(z));
  CHECK(frobenius_norm(z) == 0.0);

  Matrix eye = Matrix::identity(3);
  CHECK(eye(1, 1) == 1.0);
  CHECK(eye(1, 2) == 0.0);
}

TEST_CASE("elementwise algebra and reductions") {
  Matrix a = Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}});
  Matrix b = Matrix::from_rows({{0.5, -1.0}, {2.0, 0.0}});

  CHECK((a + b)(0, 1) == 1.0);
  CHECK((a - b)(1, 0) == 1.0);
  CHECK((a * 2.0)(1, 1) == 8.0);
  CHECK((2.0 * a) == (a * 2.0));
  CHECK(dot(a, b) == 0.5 - 2.0 + 6.0 + 0.0);
  CHECK(frobenius_norm(a) == doctest::Approx(std::sqrt(30.0)).epsilon(1e-15));
  CHECK(max_abs(Matrix::from_rows({{1.0, -5.0}, {2.0, 3.0}})) == 5.0);
  CHECK(max_abs_diff(a, b) == 4.0);
  CHECK(transpose(a)(0, 1) == 3.0);
  CHECK_THROWS_AS(a + Matrix(3, 2), ShapeError);
  CHECK_THROWS_AS(dot(a, Matrix(2, 3)), ShapeError);
}

TEST_CASE("flatten order is layer-major then row-major") {
  LayerList layers;
  layers.push_back(Matrix::from_rows({{1.0, 2.0}, {3.0, 4.0}}));
  layers.push_back(Matrix::from_rows({{5.0}, {6.0}}));
  Matrix flat = flatten(layers);
  CHECK(flat.rows() == 6);
  CHECK(flat.cols() == 1);
  for (std::size_t i = 0; i < 6; ++i) CHECK(flat(i, 0) == double(i + 1));
  CHECK(total_entries(layers) == 6);
  CHECK(layers_dot(layers, layers) == 1 + 4 + 9 + 16 + 25 + 36);
}

TEST_CASE("require_same_shapes names the offending context") {
  Matrix a(2, 3);
  Matrix b(3, 2);
  CHECK_NOTHROW(require_same_shapes(a, a, "test"));
  CHECK_THROWS_WITH_AS(require_same_shapes(a, b, "grad update"),
                       doctest::Contains("grad update"), ShapeError);
}

TEST_CASE("product kernels match the triple-loop oracle") {
  Rng rng(11);
  const std::size_t shapes[][3] = {{1, 1, 1}, {2, 3, 4}, {5, 5, 5},
                                   {7, 2, 9}, {4, 8, 3}, {16, 12, 16}};
  for (const auto& s : shapes) {
    Matrix a = oracles::gaussian_matrix(s[0], s[1], rng);
    Matrix b = oracles::gaussian_matrix(s[1], s[2], rng);
    Matrix want = oracles::naive_matmul(a, b);

    CHECK(max_abs_diff(kernels::serial::matmul(a, b), want) <= 1e-13);
    CHECK(kernels::par::matmul(a, b) == kernels::serial::matmul(a, b));
    CHECK(kernels::matmul(a, b) == kernels::serial::matmul(a, b));

    CHECK(max_abs_diff(kernels::serial::matmul_transa(a, want),
                       oracles::naive_matmul(transpose(a), want)) <= 1e-13);
    CHECK(kernels::par::matmul_transa(a, want) == kernels::serial::matmul_transa(a, want));

    Matrix c = oracles::gaussian_matrix(s[2], s[1], rng);
    CHECK(max_abs_diff(kernels::serial::matmul_transb(a, transpose(b)),
                       oracles::naive_matmul(a, b)) <= 1e-13);
    CHECK(kernels::par::matmul_transb(a, c) == kernels::serial::matmul_transb(a, c));
  }
}

TEST_CASE("gram kernels are exactly symmetric and match the oracle") {
  Rng rng(12);
  for (int rep = 0; rep < 10; ++rep) {
    Matrix g = oracles::gaussian_matrix(3 + rep % 5, 2 + rep % 7, rng);
    Matrix left = kernels::gram_left(g);
    Matrix right = kernels::gram_right(g);

    CHECK(max_abs_diff(left, oracles::naive_matmul(g, transpose(g))) <= 1e-13);
    CHECK(max_abs_diff(right, oracles::naive_matmul(transpose(g), g)) <= 1e-13);
    for (std::size_t i = 0; i < left.rows(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        CHECK(left(i, j) == left(j, i));
      }
    }
    for (std::size_t i = 0; i < right.rows(); ++i) {
      for (std::size_t j = 0; j < i; ++j) {
        CHECK(right(i, j) == right(j, i));
      }
    }
    CHECK(kernels::par::gram_left(g) == left);
    CHECK(kernels::par::gram_right(g) == right);
  }
}

TEST_CASE("matvec kernels match matmul against a column") {
  Rng rng(13);
  Matrix a = oracles::gaussian_matrix(6, 4, rng);
  Matrix x = oracles::gaussian_matrix(4, 1, rng);
  Matrix y = oracles::naive_matmul(a, x);

  std::vector<double> xv(x.data().begin(), x.data().end());
  std::vector<double> got = kernels::matvec(a, xv);
  REQUIRE(got.size() == 6);
  for (std::size_t i = 0; i < got.size(); ++i) {
    CHECK(std::abs(got[i] - y(i, 0)) <= 1e-13);
  }
  CHECK(kernels::par::matvec(a, xv) == kernels::serial::matvec(a, xv));

  Matrix z = oracles::gaussian_matrix(6, 1, rng);
  std::vector<double> zv(z.data().begin(), z.data().end());
  Matrix want = oracles::naive_matmul(transpose(a), z);
  std::vector<double> got_t = kernels::matvec_transposed(a, zv);
  REQUIRE(got_t.size() == 4);
  for (std::size_t i = 0; i < got_t.size(); ++i) {
    CHECK(std::abs(got_t[i] - want(i, 0)) <= 1e-13);
  }
  CHECK(kernels::par::matvec_transposed(a, zv) ==
        kernels::serial::matvec_transposed(a, zv));
}

TEST_CASE("kernel results are independent of backend and thread cap") {
  Rng rng(14);
  Matrix a = oracles::gaussian_matrix(33, 17, rng);
  Matrix b = oracles::gaussian_matrix(17, 29, rng);

  kernels::set_backend(kernels::Backend::serial);
  Matrix serial_out = kernels::matmul(a, b);
  kernels::set_backend(kernels::Backend::parallel);
  Matrix par_out = kernels::matmul(a, b);
  kernels::set_max_threads(1);
  Matrix one_thread = kernels::matmul(a, b);
  kernels::set_max_threads(3);
  Matrix three_threads = kernels::matmul(a, b);
  kernels::set_max_threads(0);
  kernels::set_backend(kernels::Backend::automatic);
  Matrix automatic = kernels::matmul(a, b);

  CHECK(serial_out == par_out);
  CHECK(one_thread == par_out);
  CHECK(three_threads == par_out);
  CHECK(automatic == par_out);
  CHECK(kernels::backend() == kernels::Backend::automatic);

  CHECK_THROWS_AS(kernels::matmul(a, Matrix(3, 3)), ShapeError);
}
