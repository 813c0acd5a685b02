#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normdescent/linalg.hpp"
#include "normdescent/matrix.hpp"
#include "normdescent/rng.hpp"
#include "oracles.hpp"

using namespace normdescent;

namespace {

double orthonormality_gap(const Matrix& q) {
  Matrix gram = kernels::matmul_transa(q, q);
  return max_abs_diff(gram, Matrix::identity(gram.rows()));
}

}  // namespace

TEST_CASE("reduced svd reconstructs and orders") {
  Rng rng(21);
  const std::size_t shapes[][2] = {{1, 1}, {2, 2}, {3, 5}, {5, 3}, {8, 8}, {16, 12}};
  for (const auto& s : shapes) {
    Matrix g = oracles::gaussian_matrix(s[0], s[1], rng);
    SvdFactors f = reduced_svd(g);
    CHECK(f.rank() == std::min(s[0], s[1]));  // Gaussian: full rank a.s.
    CHECK(max_abs_diff(f.reconstruct(), g) <= 1e-12 * frobenius_norm(g));
    CHECK(orthonormality_gap(f.u) <= 1e-12);
    CHECK(orthonormality_gap(f.v) <= 1e-12);
    for (std::size_t k = 1; k < f.sigma.size(); ++k) {
      CHECK(f.sigma[k - 1] >= f.sigma[k]);
    }
    CHECK(f.sigma.back() > 0.0);
  }
}

TEST_CASE("reduced svd drops the null space of rank-deficient input") {
  Rng rng(22);
  Matrix u = oracles::gaussian_matrix(5, 1, rng);
  Matrix v = oracles::gaussian_matrix(4, 1, rng);
  Matrix outer = kernels::matmul_transb(u, v);
  SvdFactors f = reduced_svd(outer);
  CHECK(f.rank() == 1);
  CHECK(max_abs_diff(f.reconstruct(), outer) <= 1e-12 * frobenius_norm(outer));

  CHECK_THROWS_AS(reduced_svd(Matrix(3, 3)), ValidationError);
}

TEST_CASE("svd of a permutation-scaled matrix hits exact factors") {
  Matrix g = Matrix::from_rows({{0.0, 2.0}, {1.0, 0.0}});
  SvdFactors f = reduced_svd(g);
  REQUIRE(f.rank() == 2);
  CHECK(f.sigma[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(f.sigma[1] == doctest::Approx(1.0).epsilon(1e-14));
  Matrix polar = orthogonalize_via_svd(g);
  CHECK(max_abs_diff(polar, Matrix::from_rows({{0.0, 1.0}, {1.0, 0.0}})) <= 1e-13);
}

TEST_CASE("sym_eig matches hand values and stays orthogonal") {
  Matrix d = Matrix::from_rows({{4.0, 0.0}, {0.0, 9.0}});
  auto [q1, lam1] = sym_eig(d);
  CHECK(lam1[0] == doctest::Approx(4.0).epsilon(1e-14));
  CHECK(lam1[1] == doctest::Approx(9.0).epsilon(1e-14));

  Matrix s = Matrix::from_rows({{2.0, 1.0}, {1.0, 2.0}});
  auto [q2, lam2] = sym_eig(s);
  CHECK(lam2[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(lam2[1] == doctest::Approx(3.0).epsilon(1e-14));
  CHECK(orthonormality_gap(q2) <= 1e-12);

  // Q diag(lambda) Q^T reassembles the input.
  Rng rng(23);
  Matrix g = oracles::gaussian_matrix(6, 6, rng);
  Matrix sym = kernels::gram_left(g);
  auto [q, lam] = sym_eig(sym);
  Matrix scaled = q;
  for (std::size_t j = 0; j < scaled.cols(); ++j) {
    for (std::size_t i = 0; i < scaled.rows(); ++i) scaled(i, j) *= lam[j];
  }
  CHECK(max_abs_diff(kernels::matmul_transb(scaled, q), sym) <=
        1e-10 * max_abs(sym));
  for (std::size_t k = 1; k < lam.size(); ++k) CHECK(lam[k - 1] <= lam[k]);

  CHECK_THROWS_AS(sym_eig(Matrix::from_rows({{1.0, 2.0}, {0.0, 1.0}})),
                  ValidationError);
  CHECK_THROWS_AS(sym_eig(Matrix(2, 3)), ShapeError);
}

TEST_CASE("spd_inverse_root inverts to the requested power") {
  Matrix d = Matrix::from_rows({{16.0, 0.0}, {0.0, 81.0}});
  Matrix r = spd_inverse_root(d, 4, 0.0);
  CHECK(r(0, 0) == doctest::Approx(0.5).epsilon(1e-13));
  CHECK(r(1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-13));
  CHECK(std::abs(r(0, 1)) <= 1e-14);

  Rng rng(24);
  for (int p : {1, 2, 4}) {
    Matrix g = oracles::gaussian_matrix(5, 5, rng);
    Matrix s = kernels::gram_left(g);
    Matrix root = spd_inverse_root(s, p, 1e-12);
    Matrix acc = Matrix::identity(5);
    for (int k = 0; k < p; ++k) acc = matmul(acc, root);
    CHECK(max_abs_diff(matmul(acc, s), Matrix::identity(5)) <= 1e-8);
  }
}

TEST_CASE("spd_inverse_root takes the root on the range only") {
  Rng rng(25);
  Matrix x = oracles::gaussian_matrix(4, 2, rng);
  Matrix s = kernels::gram_left(x);  // rank 2 of 4
  Matrix r = spd_inverse_root(s, 2, 0.0);
  // r s r is the projector onto range(s): applying it to s gives s back.
  Matrix proj = matmul(matmul(r, s), r);
  CHECK(max_abs_diff(matmul(proj, s), s) <= 1e-8 * max_abs(s));

  Matrix negative = Matrix::from_rows({{1.0, 0.0}, {0.0, -1.0}});
  CHECK_THROWS_AS(spd_inverse_root(negative, 2, 0.0), NotPsdError);
  CHECK_THROWS_AS(spd_inverse_root(Matrix(3, 3), 2, 0.0), SingularityError);
  CHECK_THROWS_AS(spd_inverse_root(s, 0, 0.0), ValidationError);
}

TEST_CASE("newton inverse-root backend agrees with eigendecomposition") {
  Rng rng(26);
  for (int rep = 0; rep < 5; ++rep) {
    Matrix g = oracles::gaussian_matrix(4, 4, rng);
    Matrix s = kernels::gram_left(g) + Matrix::identity(4) * 0.5;  // safely definite
    for (int p : {2, 4}) {
      Matrix eig = spd_inverse_root(s, p, 0.0, InverseRootBackend::eigendecomposition);
      Matrix newton = spd_inverse_root(s, p, 0.0, InverseRootBackend::newton);
      CHECK(max_abs_diff(eig, newton) <= 1e-8 * max_abs(eig));
    }
  }
}

TEST_CASE("spectral norm matches the svd and reports non-convergence") {
  Rng rng(27);
  for (int rep = 0; rep < 8; ++rep) {
    Matrix g = oracles::gaussian_matrix(3 + rep, 2 + rep % 4, rng);
    const double want = reduced_svd(g).sigma.front();
    CHECK(oracles::rel_gap(spectral_norm(g, 1e-12, 3000), want) <= 1e-9);
  }
  Matrix g = oracles::gaussian_matrix(6, 6, rng);
  CHECK_THROWS_AS(spectral_norm(g, 0.0, 100), ValidationError);
  try {
    spectral_norm(g, 1e-300, 2);  // cannot stabilize that tightly in 2 rounds
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best_estimate > 0.0);
  }
}

TEST_CASE("polynomial specs validate their basin on construction") {
  PolynomialSpec cubic = PolynomialSpec::default_cubic();
  CHECK(cubic.coefficients() == std::vector<double>{1.5, -0.5});
  CHECK(cubic.iterations() == 30);
  CHECK(cubic.apply_scalar(1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(cubic.apply_scalar(1.0 / 3.0) == doctest::Approx(13.0 / 27.0).epsilon(1e-15));

  // x -> 3x leaves (0, sqrt(3)) immediately; x -> 0.2x never reaches 1 but
  // stays in the basin, so construction accepts it and convergence checks
  // are the caller's business.
  CHECK_THROWS_AS(PolynomialSpec({3.0}, 5, SvNormalization::spectral), ValidationError);
  CHECK_THROWS_AS(PolynomialSpec({}, 5, SvNormalization::spectral), ValidationError);
  CHECK_THROWS_AS(PolynomialSpec({1.5, -0.5}, -1, SvNormalization::spectral),
                  ValidationError);
  CHECK_NOTHROW(PolynomialSpec({0.2}, 5, SvNormalization::spectral));
}

TEST_CASE("newton-schulz trace starts at the normalized input") {
  Matrix g = Matrix::from_rows({{3.0, 0.0}, {0.0, 1.0}});
  PolynomialSpec one_step({1.5, -0.5}, 1, SvNormalization::spectral);
  std::vector<Matrix> trace = newton_schulz_trace(g, one_step);
  REQUIRE(trace.size() == 2);
  // Spectral normalization divides by sigma_max = 3 (up to power-iteration
  // tolerance), so one cubic step maps the singular values (1, 1/3) to
  // (1, 13/27).
  CHECK(trace[0](0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(trace[0](1, 1) == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
  CHECK(trace[1](0, 0) == doctest::Approx(1.0).epsilon(1e-9));
  CHECK(trace[1](1, 1) == doctest::Approx(13.0 / 27.0).epsilon(1e-9));
  CHECK(std::abs(trace[1](0, 1)) <= 1e-12);

  CHECK_THROWS_AS(newton_schulz_trace(Matrix(2, 2), one_step), ValidationError);
}

TEST_CASE("orthogonalization backends agree on conditioned input") {
  Rng rng(28);
  for (int rep = 0; rep < 6; ++rep) {
    Matrix g = oracles::conditioned_matrix(4 + rep % 3, 6 - rep % 3, 50.0, rng);
    Matrix via_svd = orthogonalize_via_svd(g);
    Matrix via_ns = orthogonalize_newton_schulz(g, PolynomialSpec::default_cubic());
    CHECK(max_abs_diff(via_svd, via_ns) <= 1e-5);
    // Semi-orthogonality on the smaller side.
    Matrix gram = g.rows() <= g.cols() ? kernels::gram_left(via_svd)
                                       : kernels::gram_right(via_svd);
    CHECK(max_abs_diff(gram, Matrix::identity(gram.rows())) <= 1e-12);
  }
}

TEST_CASE("frobenius normalization also lands in the basin") {
  Rng rng(29);
  Matrix g = oracles::conditioned_matrix(5, 4, 10.0, rng);
  PolynomialSpec spec({1.5, -0.5}, 40, SvNormalization::frobenius);
  Matrix out = orthogonalize_newton_schulz(g, spec);
  CHECK(max_abs_diff(out, orthogonalize_via_svd(g)) <= 1e-5);
}
