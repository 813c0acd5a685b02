#include "normdescent/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "normdescent/rng.hpp"

namespace normdescent {

Matrix SvdFactors::reconstruct() const {
  Matrix us = u;  // scale columns by sigma, then multiply by v^T
  for (std::size_t i = 0; i < us.rows(); ++i)
    for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= sigma[j];
  return kernels::matmul_transb(us, v);
}

PolynomialSpec::PolynomialSpec(std::vector<double> coefficients, int iterations,
                               SvNormalization normalization)
    : coefficients_(std::move(coefficients)),
      iterations_(iterations),
      normalization_(normalization) {
  if (coefficients_.empty())
    throw ValidationError("polynomial spec needs at least one coefficient");
  for (double c : coefficients_)
    if (!std::isfinite(c)) throw ValidationError("polynomial coefficients must be finite");
  if (iterations_ < 1) throw ValidationError("polynomial iterations must be positive");

  // Both normalizations put the singular values of X_0 in (0, 1]; iterate the
  // scalar map from a dense grid of that interval and reject any escape from
  // (0, sqrt(3)).
  const int grid = 10000;
  const double bound = std::sqrt(3.0);
  const int steps = std::min(iterations_, 1000);
  for (int i = 1; i <= grid; ++i) {
    double x = static_cast<double>(i) / grid;
    if (!(apply_scalar(x) > 0.0))
      throw ValidationError("polynomial map must be positive on (0, 1]");
    double y = x;
    for (int k = 0; k < steps; ++k) {
      y = apply_scalar(y);
      if (!(y > 0.0 && y < bound))
        throw ValidationError("polynomial iteration leaves (0, sqrt(3)) at x = " +
                              std::to_string(x));
    }
  }
}

PolynomialSpec PolynomialSpec::default_cubic() {
  return PolynomialSpec({1.5, -0.5}, 30, SvNormalization::spectral);
}

double PolynomialSpec::apply_scalar(double x) const {
  // Horner in x^2 over odd powers.
  double x2 = x * x;
  double acc = coefficients_.back();
  for (std::size_t i = coefficients_.size() - 1; i-- > 0;)
    acc = acc * x2 + coefficients_[i];
  return acc * x;
}

namespace {

double column_dot(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += a[i] * b[i];
  return acc;
}

}  // namespace

SvdFactors reduced_svd(const Matrix& g) {
  if (is_zero(g))
    throw ValidationError("reduced_svd: zero matrix has no positive singular values");

  const bool transposed = g.rows() < g.cols();
  const Matrix work = transposed ? transpose(g) : g;
  const std::size_t m = work.rows(), n = work.cols();

  // Column-major copies; one-sided Jacobi rotates column pairs of a until all
  // pairs are numerically orthogonal, accumulating the rotations in v.
  std::vector<std::vector<double>> a(n, std::vector<double>(m));
  std::vector<std::vector<double>> v(n, std::vector<double>(n, 0.0));
  for (std::size_t j = 0; j < n; ++j) {
    v[j][j] = 1.0;
    for (std::size_t i = 0; i < m; ++i) a[j][i] = work(i, j);
  }

  const double tol = 1e-14;
  const int max_sweeps = 64;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool rotated = false;
    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double alpha = column_dot(a[p], a[p]);
        const double beta = column_dot(a[q], a[q]);
        const double gamma = column_dot(a[p], a[q]);
        if (gamma == 0.0 || std::abs(gamma) <= tol * std::sqrt(alpha * beta)) continue;
        rotated = true;
        const double zeta = (beta - alpha) / (2.0 * gamma);
        const double t =
            (zeta >= 0.0 ? 1.0 : -1.0) / (std::abs(zeta) + std::sqrt(1.0 + zeta * zeta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = c * t;
        for (std::size_t i = 0; i < m; ++i) {
          const double ap = a[p][i], aq = a[q][i];
          a[p][i] = c * ap - s * aq;
          a[q][i] = s * ap + c * aq;
        }
        for (std::size_t i = 0; i < n; ++i) {
          const double vp = v[p][i], vq = v[q][i];
          v[p][i] = c * vp - s * vq;
          v[q][i] = s * vp + c * vq;
        }
      }
    }
    if (!rotated) break;
  }

  std::vector<double> norms(n);
  for (std::size_t j = 0; j < n; ++j) norms[j] = std::sqrt(column_dot(a[j], a[j]));
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return norms[x] > norms[y]; });

  const double smax = norms[order[0]];
  std::size_t r = 0;
  while (r < n && norms[order[r]] > 1e-12 * smax) ++r;

  Matrix u_out(m, r);
  Matrix v_out(n, r);
  std::vector<double> sigma(r);
  for (std::size_t k = 0; k < r; ++k) {
    const std::size_t j = order[k];
    sigma[k] = norms[j];
    for (std::size_t i = 0; i < m; ++i) u_out(i, k) = a[j][i] / norms[j];
    for (std::size_t i = 0; i < n; ++i) v_out(i, k) = v[j][i];
  }

  if (transposed) std::swap(u_out, v_out);
  return SvdFactors{std::move(u_out), std::move(sigma), std::move(v_out)};
}

std::pair<Matrix, std::vector<double>> sym_eig(const Matrix& s) {
  if (s.rows() != s.cols()) throw ShapeError("sym_eig: matrix must be square");
  const std::size_t n = s.rows();
  const double scale = std::max(1.0, max_abs(s));
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j)
      if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale)
        throw ValidationError("sym_eig: input is not symmetric within tolerance");

  // Work on the symmetrized copy so roundoff asymmetry cannot bias rotations.
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) a(i, j) = 0.5 * (s(i, j) + s(j, i));
  Matrix q = Matrix::identity(n);

  const double stop = 1e-15 * std::max(1.0, frobenius_norm(a));
  const int max_sweeps = 100;
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (std::size_t p = 0; p + 1 < n; ++p)
      for (std::size_t qq = p + 1; qq < n; ++qq) off = std::max(off, std::abs(a(p, qq)));
    if (off <= stop) break;

    for (std::size_t p = 0; p + 1 < n; ++p) {
      for (std::size_t r = p + 1; r < n; ++r) {
        const double apq = a(p, r);
        if (std::abs(apq) <= stop * 1e-2) continue;
        const double theta = (a(r, r) - a(p, p)) / (2.0 * apq);
        const double t = (theta >= 0.0 ? 1.0 : -1.0) /
                         (std::abs(theta) + std::sqrt(1.0 + theta * theta));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double sn = c * t;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a(k, p), akr = a(k, r);
          a(k, p) = c * akp - sn * akr;
          a(k, r) = sn * akp + c * akr;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a(p, k), ark = a(r, k);
          a(p, k) = c * apk - sn * ark;
          a(r, k) = sn * apk + c * ark;
        }
        a(p, r) = 0.0;
        a(r, p) = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          const double qkp = q(k, p), qkr = q(k, r);
          q(k, p) = c * qkp - sn * qkr;
          q(k, r) = sn * qkp + c * qkr;
        }
      }
    }
  }

  std::vector<double> lambda(n);
  for (std::size_t i = 0; i < n; ++i) lambda[i] = a(i, i);
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t x, std::size_t y) { return lambda[x] < lambda[y]; });

  Matrix q_sorted(n, n);
  std::vector<double> lambda_sorted(n);
  for (std::size_t k = 0; k < n; ++k) {
    lambda_sorted[k] = lambda[order[k]];
    for (std::size_t i = 0; i < n; ++i) q_sorted(i, k) = q(i, order[k]);
  }
  return {std::move(q_sorted), std::move(lambda_sorted)};
}

namespace {

Matrix inverse_root_from_eig(const Matrix& q, const std::vector<double>& w) {
  // q * diag(w) * q^T, symmetrized.
  Matrix qs = q;
  for (std::size_t i = 0; i < qs.rows(); ++i)
    for (std::size_t j = 0; j < qs.cols(); ++j) qs(i, j) *= w[j];
  Matrix b = kernels::matmul_transb(qs, q);
  for (std::size_t i = 0; i < b.rows(); ++i)
    for (std::size_t j = 0; j < i; ++j) {
      const double v = 0.5 * (b(i, j) + b(j, i));
      b(i, j) = v;
      b(j, i) = v;
    }
  return b;
}

// Coupled Newton iteration for A^(-1/p): X_{k+1} = X_k N_k, M_{k+1} = N_k^p M_k
// with N_k = ((p+1) I - M_k)/p, started from M_0 = A/c, X_0 = c^(-1/p) I.
// Every iterate is a polynomial in A, so symmetry is preserved. Converges for
// definite A; a singular A leaves M short of I and we fail loudly.
Matrix inverse_root_newton(const Matrix& a, int p) {
  const std::size_t n = a.rows();
  const double c = std::max(frobenius_norm(a), 1e-300);
  Matrix m_k(n, n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) m_k(i, j) = a(i, j) / c;
  Matrix x_k = Matrix::identity(n) * std::pow(c, -1.0 / p);

  const int max_iter = 300;
  double residual = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Matrix n_k(n, n);
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        n_k(i, j) = ((i == j ? p + 1.0 : 0.0) - m_k(i, j)) / p;
    x_k = kernels::matmul(x_k, n_k);
    Matrix npow = n_k;
    for (int e = 1; e < p; ++e) npow = kernels::matmul(npow, n_k);
    m_k = kernels::matmul(npow, m_k);

    residual = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        residual = std::max(residual, std::abs(m_k(i, j) - (i == j ? 1.0 : 0.0)));
    if (residual < 1e-13) return x_k;
  }
  throw ConvergenceError("inverse root Newton iteration did not converge (input may be "
                         "singular); residual " +
                             std::to_string(residual),
                         residual);
}

}  // namespace

Matrix spd_inverse_root(const Matrix& s, int p, double epsilon, InverseRootBackend backend) {
  if (p < 1) throw ValidationError("spd_inverse_root: p must be a positive integer");
  if (!(epsilon >= 0.0)) throw ValidationError("spd_inverse_root: epsilon must be >= 0");
  if (s.rows() != s.cols()) throw ShapeError("spd_inverse_root: matrix must be square");

  if (backend == InverseRootBackend::newton) {
    // Symmetry gate matches the eigendecomposition path.
    const double scale = std::max(1.0, max_abs(s));
    for (std::size_t i = 0; i < s.rows(); ++i)
      for (std::size_t j = i + 1; j < s.cols(); ++j)
        if (std::abs(s(i, j) - s(j, i)) > 1e-10 * scale)
          throw ValidationError("spd_inverse_root: input is not symmetric within tolerance");
    Matrix shifted = s;
    for (std::size_t i = 0; i < s.rows(); ++i) shifted(i, i) += epsilon;
    if (max_abs(shifted) < 1e-300)
      throw SingularityError("spd_inverse_root: matrix is numerically zero and epsilon is 0");
    return inverse_root_newton(shifted, p);
  }

  auto [q, lambda] = sym_eig(s);
  if (lambda.front() < -1e-8)
    throw NotPsdError("spd_inverse_root: eigenvalue " + std::to_string(lambda.front()) +
                      " below PSD tolerance");

  std::vector<double> shifted(lambda.size());
  double maxshift = 0.0;
  for (std::size_t i = 0; i < lambda.size(); ++i) {
    shifted[i] = std::max(lambda[i], 0.0) + epsilon;
    maxshift = std::max(maxshift, shifted[i]);
  }
  if (maxshift < 1e-300) {
    if (epsilon == 0.0)
      throw SingularityError("spd_inverse_root: all eigenvalues are zero and epsilon is 0");
    throw SingularityError("spd_inverse_root: matrix plus shift is numerically zero");
  }

  const double cutoff = 1e-12 * maxshift;
  std::vector<double> w(lambda.size());
  for (std::size_t i = 0; i < lambda.size(); ++i)
    w[i] = shifted[i] > cutoff ? std::pow(shifted[i], -1.0 / p) : 0.0;
  return inverse_root_from_eig(q, w);
}

double spectral_norm(const Matrix& m, double tol, int max_iter) {
  if (is_zero(m)) throw ValidationError("spectral_norm: zero matrix");
  if (!(tol > 0.0)) throw ValidationError("spectral_norm: tol must be positive");
  if (max_iter < 1) throw ValidationError("spectral_norm: max_iter must be positive");

  // Power iteration on m^T m (or m m^T, whichever is smaller), with a fixed
  // seeded start vector so results are reproducible.
  const bool tall = m.cols() <= m.rows();
  const std::size_t d = tall ? m.cols() : m.rows();
  Rng rng(0x5715a1u);
  std::vector<double> b(d);
  for (double& v : b) v = rng.gaussian();

  auto normalize = [](std::vector<double>& x) {
    double nrm = 0.0;
    for (double v : x) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (nrm > 0.0)
      for (double& v : x) v /= nrm;
    return nrm;
  };
  normalize(b);

  double sigma = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    std::vector<double> y;
    if (tall) {
      std::vector<double> z = kernels::matvec(m, b);
      y = kernels::matvec_transposed(m, z);
    } else {
      std::vector<double> z = kernels::matvec_transposed(m, b);
      y = kernels::matvec(m, z);
    }
    double rayleigh = 0.0;  // b^T (Gram) b with unit b
    for (std::size_t i = 0; i < d; ++i) rayleigh += b[i] * y[i];
    const double next = std::sqrt(std::max(rayleigh, 0.0));
    const double ynorm = normalize(y);
    if (ynorm == 0.0) {
      // start vector fell into the null space; reseed and continue
      for (double& v : y) v = rng.gaussian();
      normalize(y);
    }
    b = std::move(y);
    if (it > 0 && std::abs(next - sigma) <= 0.1 * tol * std::max(next, 1e-300)) {
      return next;
    }
    sigma = next;
  }
  throw ConvergenceError("spectral_norm: power iteration did not stabilize within " +
                             std::to_string(max_iter) + " iterations",
                         sigma);
}

namespace {

// P(Y) = c0 I + c1 Y + c2 Y^2 + ... with the two-term case kept free of
// matrix products; the coefficients are the odd-polynomial coefficients, Y is
// the Gram matrix of the current iterate.
Matrix poly_in_gram(const Matrix& y, const std::vector<double>& c) {
  const std::size_t n = y.rows();
  if (c.size() == 1) {
    Matrix p(n, n);
    for (std::size_t i = 0; i < n; ++i) p(i, i) = c[0];
    return p;
  }
  if (c.size() == 2) {
    Matrix p = y * c[1];
    for (std::size_t i = 0; i < n; ++i) p(i, i) += c[0];
    return p;
  }
  Matrix p = y * c.back();
  for (std::size_t i = 0; i < n; ++i) p(i, i) += c[c.size() - 2];
  for (std::size_t k = c.size() - 2; k-- > 0;) {
    p = kernels::matmul(y, p);
    for (std::size_t i = 0; i < n; ++i) p(i, i) += c[k];
  }
  return p;
}

}  // namespace

std::vector<Matrix> newton_schulz_trace(const Matrix& g, const PolynomialSpec& spec) {
  if (is_zero(g))
    throw ValidationError("orthogonalize: zero matrix cannot be normalized");

  double scale;
  if (spec.normalization() == SvNormalization::spectral) {
    try {
      scale = spectral_norm(g, 1e-12, 3000);
    } catch (const ConvergenceError& e) {
      scale = e.best_estimate;  // lower bound; slight overshoot stays in the basin
    }
  } else {
    scale = frobenius_norm(g);
  }

  Matrix x(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) x.data()[i] = g.data()[i] / scale;

  std::vector<Matrix> trace;
  trace.reserve(static_cast<std::size_t>(spec.iterations()) + 1);
  trace.push_back(x);
  for (int it = 0; it < spec.iterations(); ++it) {
    // Work on the smaller Gram side: P(X X^T) X == X P(X^T X).
    if (x.rows() <= x.cols()) {
      Matrix y = kernels::gram_left(x);
      x = kernels::matmul(poly_in_gram(y, spec.coefficients()), x);
    } else {
      Matrix y = kernels::gram_right(x);
      x = kernels::matmul(x, poly_in_gram(y, spec.coefficients()));
    }
    trace.push_back(x);
  }
  return trace;
}

Matrix orthogonalize_newton_schulz(const Matrix& g, const PolynomialSpec& spec) {
  return newton_schulz_trace(g, spec).back();
}

Matrix orthogonalize_via_svd(const Matrix& g) {
  SvdFactors f = reduced_svd(g);
  return kernels::matmul_transb(f.u, f.v);
}

}  // namespace normdescent
