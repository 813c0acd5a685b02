#pragma once

#include <utility>
#include <vector>

#include "normdescent/kernels.hpp"
#include "normdescent/matrix.hpp"

namespace normdescent {

// Reduced SVD of an m x n matrix: u is m x r, v is n x r, sigma holds the r
// singular values in descending order, all strictly positive. r is the
// numerical rank (values above 1e-12 * sigma_max are kept).
struct SvdFactors {
  Matrix u;
  std::vector<double> sigma;
  Matrix v;

  std::size_t rank() const { return sigma.size(); }
  Matrix reconstruct() const;  // u * diag(sigma) * v^T
};

enum class SvNormalization { spectral, frobenius };

// Odd polynomial iteration x <- a*x + b*x^3 + c*x^5 + ... applied to the
// singular values of a matrix. Construction validates the scalar map on a
// dense grid of the normalization's guaranteed singular-value range (0, 1]:
// every iterate of every grid point must stay inside (0, sqrt(3)), the basin
// in which such iterations can converge to 1. Specs that leave the basin are
// rejected up front instead of diverging at run time.
class PolynomialSpec {
 public:
  PolynomialSpec(std::vector<double> coefficients, int iterations,
                 SvNormalization normalization);

  // (3/2, -1/2), 30 iterations, spectral normalization.
  static PolynomialSpec default_cubic();

  const std::vector<double>& coefficients() const { return coefficients_; }
  int iterations() const { return iterations_; }
  SvNormalization normalization() const { return normalization_; }

  // The scalar map g(x); same coefficient order as the matrix iteration.
  double apply_scalar(double x) const;

 private:
  std::vector<double> coefficients_;
  int iterations_;
  SvNormalization normalization_;
};

inline Matrix matmul(const Matrix& a, const Matrix& b) { return kernels::matmul(a, b); }

// One-sided Jacobi. Accurate for the dense, desk-scale matrices this library
// targets. Zero input has no factors and raises ValidationError.
SvdFactors reduced_svd(const Matrix& g);

// Cyclic Jacobi eigendecomposition of a symmetric matrix. Returns
// (eigenvectors as columns, eigenvalues ascending). Inputs asymmetric beyond
// 1e-10 (relative to max |entry|, floored at 1) raise ValidationError.
std::pair<Matrix, std::vector<double>> sym_eig(const Matrix& s);

enum class InverseRootBackend { eigendecomposition, newton };

// (s + epsilon*I)^(-1/p) for symmetric PSD s, via Q diag((lambda+eps)^(-1/p)) Q^T.
// Eigenvalues below -1e-8 raise NotPsdError; if every shifted eigenvalue is
// below 1e-300 the matrix is treated as zero and SingularityError is raised.
// Shifted eigenvalues below 1e-12 * max are mapped to zero instead of
// infinity, i.e. the root is taken on the range of s only. That convention is
// what makes expressions like (G G^T)^(-1/4) G well defined when G is a
// non-square full-rank matrix and epsilon is zero.
// The newton backend runs a coupled Newton iteration instead; it requires the
// shifted matrix to be definite and exists as an independent cross-check.
Matrix spd_inverse_root(const Matrix& s, int p, double epsilon,
                        InverseRootBackend backend = InverseRootBackend::eigendecomposition);

// Largest singular value by power iteration on the smaller Gram side.
// Deterministic start vector. Throws ConvergenceError (carrying the best
// estimate) if max_iter rounds do not stabilize the estimate to tol.
double spectral_norm(const Matrix& m, double tol, int max_iter);

// All iterates X_0 .. X_T of the polynomial orthogonalization, X_0 = g/||g||.
std::vector<Matrix> newton_schulz_trace(const Matrix& g, const PolynomialSpec& spec);

// Last iterate only: the approximate closest semi-orthogonal matrix.
Matrix orthogonalize_newton_schulz(const Matrix& g, const PolynomialSpec& spec);

// u * v^T from the reduced SVD; rank-deficient g yields the rank-r factor.
Matrix orthogonalize_via_svd(const Matrix& g);

}  // namespace normdescent
