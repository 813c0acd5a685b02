#include "normdescent/verify.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstddef>
#include <limits>
#include <sstream>

#include "normdescent/errors.hpp"
#include "normdescent/kernels.hpp"
#include "normdescent/linalg.hpp"
#include "normdescent/models.hpp"
#include "normdescent/norms.hpp"
#include "normdescent/optimizers.hpp"
#include "normdescent/rng.hpp"
#include "normdescent/steepest.hpp"

namespace normdescent {
namespace {

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols) {
  Matrix m(rows, cols);
  for (double& v : m.data()) v = rng.gaussian();
  return m;
}

// Modified Gram-Schmidt on Gaussian columns; redraws a column on the
// (measure-zero) chance it collapses.
Matrix random_orthogonal(Rng& rng, std::size_t n) {
  Matrix q(n, n);
  for (std::size_t j = 0; j < n; ++j) {
    for (int attempt = 0; attempt < 32; ++attempt) {
      for (std::size_t i = 0; i < n; ++i) q(i, j) = rng.gaussian();
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * q(i, j);
        for (std::size_t i = 0; i < n; ++i) q(i, j) -= proj * q(i, k);
      }
      double norm = 0.0;
      for (std::size_t i = 0; i < n; ++i) norm += q(i, j) * q(i, j);
      norm = std::sqrt(norm);
      if (norm > 1e-6) {
        for (std::size_t i = 0; i < n; ++i) q(i, j) /= norm;
        break;
      }
    }
  }
  return q;
}

// U diag(sigma) V^T with sigma_1 = 1 and sigma_min = 1/cond, log-spaced
// interior values, so the condition number is exact by construction.
Matrix conditioned_matrix(Rng& rng, std::size_t rows, std::size_t cols, double cond) {
  const std::size_t k = std::min(rows, cols);
  std::vector<double> sigma(k, 1.0);
  if (k > 1) {
    sigma[k - 1] = 1.0 / cond;
    for (std::size_t i = 1; i + 1 < k; ++i) {
      sigma[i] = std::exp(-rng.uniform() * std::log(cond));
    }
    std::sort(sigma.begin(), sigma.end(), std::greater<>());
  }
  Matrix u = random_orthogonal(rng, rows);
  Matrix v = random_orthogonal(rng, cols);
  Matrix a(rows, cols);
  for (std::size_t i = 0; i < rows; ++i) {
    for (std::size_t j = 0; j < cols; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < k; ++t) acc += sigma[t] * u(i, t) * v(j, t);
      a(i, j) = acc;
    }
  }
  return a;
}

Matrix symmetrized_spd(Rng& rng, std::size_t n, double lo, double hi) {
  Matrix q = random_orthogonal(rng, n);
  std::vector<double> eig(n);
  for (double& e : eig) e = lo + rng.uniform() * (hi - lo);
  Matrix a(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j <= i; ++j) {
      double acc = 0.0;
      for (std::size_t t = 0; t < n; ++t) acc += eig[t] * q(i, t) * q(j, t);
      a(i, j) = acc;
      a(j, i) = acc;
    }
  }
  return a;
}

std::uint64_t ulp_distance(double a, double b) {
  if (a == b) return 0;
  if (std::isnan(a) || std::isnan(b)) return std::numeric_limits<std::uint64_t>::max();
  auto ordered = [](double x) {
    const std::uint64_t u = std::bit_cast<std::uint64_t>(x);
    return (u & 0x8000000000000000ull) ? ~u : (u | 0x8000000000000000ull);
  };
  const std::uint64_t ka = ordered(a);
  const std::uint64_t kb = ordered(b);
  return ka > kb ? ka - kb : kb - ka;
}

double lp_of(std::span<const double> xs, double p) {
  if (std::isinf(p)) {
    double m = 0.0;
    for (double x : xs) m = std::max(m, std::fabs(x));
    return m;
  }
  if (p == 1.0) {
    double s = 0.0;
    for (double x : xs) s += std::fabs(x);
    return s;
  }
  if (p == 2.0) {
    double s = 0.0;
    for (double x : xs) s += x * x;
    return std::sqrt(s);
  }
  double s = 0.0;
  for (double x : xs) s += std::pow(std::fabs(x), p);
  return std::pow(s, 1.0 / p);
}

double rel_gap(double got, double want) {
  return std::fabs(got - want) / std::max(1.0, std::fabs(want));
}

CheckResult make_result(std::string suite, std::string name, bool pass, double err,
                        std::string detail = "") {
  return CheckResult{std::move(suite), std::move(name), pass, err, std::move(detail)};
}

// ---------------------------------------------------------------- linalg --

CheckResult check_svd_reconstructs_input(Rng rng) {
  const std::size_t shapes[][2] = {{5, 3}, {3, 5}, {6, 6}, {8, 2}, {1, 4}, {4, 1}};
  double worst = 0.0;
  for (auto [r, c] : shapes) {
    for (int rep = 0; rep < 5; ++rep) {
      Matrix a = gaussian_matrix(rng, r, c);
      SvdFactors f = reduced_svd(a);
      worst = std::max(worst, max_abs_diff(f.reconstruct(), a) /
                                  std::max(1.0, frobenius_norm(a)));
      Matrix utu = kernels::gram_right(f.u);
      Matrix vtv = kernels::gram_right(f.v);
      worst = std::max(worst, max_abs_diff(utu, Matrix::identity(f.rank())));
      worst = std::max(worst, max_abs_diff(vtv, Matrix::identity(f.rank())));
      for (std::size_t i = 1; i < f.sigma.size(); ++i) {
        if (f.sigma[i] > f.sigma[i - 1]) worst = std::max(worst, 1.0);
      }
    }
  }
  return make_result("linalg", "svd_reconstructs_input", worst <= 1e-10, worst);
}

CheckResult check_orthogonalize_backends_agree(Rng rng) {
  const std::size_t shapes[][2] = {{6, 4}, {5, 5}, {3, 7}};
  double worst = 0.0;
  for (auto [r, c] : shapes) {
    for (int rep = 0; rep < 8; ++rep) {
      Matrix a = conditioned_matrix(rng, r, c, 1.0 + rng.uniform() * 99.0);
      Matrix ns = orthogonalize_newton_schulz(a, PolynomialSpec::default_cubic());
      Matrix sv = orthogonalize_via_svd(a);
      worst = std::max(worst, frobenius_norm(ns - sv));
    }
  }
  return make_result("linalg", "orthogonalize_backends_agree", worst <= 1e-5, worst);
}

// (G G^T)^(-1/4) G (G^T G)^(-1/4), (G G^T)^(-1/2) G, G (G^T G)^(-1/2), and
// the SVD polar factor are the same matrix; inverse roots act as
// pseudo-inverses on the rank-deficient Gram side.
CheckResult check_inverse_root_orthogonalization_identity(Rng rng) {
  const std::size_t shapes[][2] = {{4, 3}, {5, 5}, {3, 6}};
  double worst = 0.0;
  for (auto [r, c] : shapes) {
    for (int rep = 0; rep < 6; ++rep) {
      Matrix g = conditioned_matrix(rng, r, c, 1.0 + rng.uniform() * 19.0);
      Matrix gl = kernels::gram_left(g);
      Matrix gr = kernels::gram_right(g);
      Matrix e1 = kernels::matmul(kernels::matmul(spd_inverse_root(gl, 4, 0.0), g),
                                  spd_inverse_root(gr, 4, 0.0));
      Matrix e2 = kernels::matmul(spd_inverse_root(gl, 2, 0.0), g);
      Matrix e3 = kernels::matmul(g, spd_inverse_root(gr, 2, 0.0));
      Matrix e4 = orthogonalize_via_svd(g);
      worst = std::max({worst, frobenius_norm(e1 - e4), frobenius_norm(e2 - e4),
                        frobenius_norm(e3 - e4)});
    }
  }
  return make_result("linalg", "inverse_root_orthogonalization_identity",
                     worst <= 1e-8, worst);
}

// On a diagonal matrix the iteration touches each diagonal entry
// independently, so it must match the scalar recurrence bit for bit.
CheckResult check_newton_schulz_diagonal_scalar_action(Rng rng) {
  double worst = 0.0;
  bool exact = true;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t n = 3;
    Matrix d(n, n);
    for (std::size_t i = 0; i < n; ++i) d(i, i) = 0.05 + 0.95 * rng.uniform();
    const PolynomialSpec spec = PolynomialSpec::default_cubic();
    std::vector<Matrix> trace = newton_schulz_trace(d, spec);
    const double c0 = spec.coefficients()[0];
    const double c1 = spec.coefficients()[1];
    std::vector<double> x(n);
    for (std::size_t i = 0; i < n; ++i) x[i] = trace[0](i, i);
    for (std::size_t step = 1; step < trace.size(); ++step) {
      for (std::size_t i = 0; i < n; ++i) {
        const double y = x[i] * x[i];
        const double p = y * c1 + c0;
        x[i] = p * x[i];
        const double got = trace[step](i, i);
        if (got != x[i]) exact = false;
        worst = std::max(worst, std::fabs(got - x[i]));
        if (x[i] <= 0.0 || x[i] >= std::sqrt(3.0)) exact = false;
      }
    }
  }
  return make_result("linalg", "newton_schulz_diagonal_scalar_action", exact, worst);
}

CheckResult check_spd_inverse_root_inverts(Rng rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 6; ++rep) {
    const std::size_t n = 2 + rep % 4;
    Matrix a = symmetrized_spd(rng, n, 0.1, 10.0);
    for (int p : {1, 2, 4}) {
      Matrix r = spd_inverse_root(a, p, 0.0);
      Matrix acc = Matrix::identity(n);
      for (int k = 0; k < p; ++k) acc = kernels::matmul(acc, r);
      worst = std::max(worst, max_abs_diff(kernels::matmul(acc, a), Matrix::identity(n)));
      Matrix rn = spd_inverse_root(a, p, 0.0, InverseRootBackend::newton);
      worst = std::max(worst, max_abs_diff(rn, r) * 1e-2);  // 1e-6 budget vs 1e-8 gate
    }
  }
  return make_result("linalg", "spd_inverse_root_inverts", worst <= 1e-8, worst);
}

// ----------------------------------------------------------------- norms --

CheckResult check_induced_norm_formulas_tight(Rng rng) {
  const std::size_t shapes[][2] = {{3, 5}, {5, 3}, {8, 8}, {4, 4}};
  const double ps[] = {1.0, 2.0, NormSpec::kInf};
  const int samples = 100000;
  double worst_excess = 0.0;
  double worst_attain = 0.0;
  for (auto [r, c] : shapes) {
    Matrix m = gaussian_matrix(rng, r, c);
    std::vector<double> x(c);
    for (double p : ps) {
      const double n_col = matrix_norm(m, NormSpec::induced_l1_to_lp(p));
      const double n_row = matrix_norm(m, NormSpec::induced_lp_to_linf(p));
      for (int s = 0; s < samples; ++s) {
        for (double& v : x) v = rng.gaussian();
        std::vector<double> y = kernels::matvec(m, x);
        const double ratio_col = lp_of(y, p) / lp_of(x, 1.0);
        const double ratio_row = lp_of(y, NormSpec::kInf) / lp_of(x, p);
        worst_excess = std::max(worst_excess, (ratio_col - n_col) / n_col);
        worst_excess = std::max(worst_excess, (ratio_row - n_row) / n_row);
      }
      // Column norms are attained by a basis vector...
      std::size_t best_col = 0;
      double best_col_val = -1.0;
      for (std::size_t j = 0; j < c; ++j) {
        std::vector<double> col(r);
        for (std::size_t i = 0; i < r; ++i) col[i] = m(i, j);
        const double v = lp_of(col, p);
        if (v > best_col_val) {
          best_col_val = v;
          best_col = j;
        }
      }
      std::fill(x.begin(), x.end(), 0.0);
      x[best_col] = 1.0;
      std::vector<double> y = kernels::matvec(m, x);
      worst_attain = std::max(worst_attain, std::fabs(lp_of(y, p) - n_col) / n_col);

      // ...and row norms by the dual-aligned input for the best row.
      const double q = p == 1.0 ? NormSpec::kInf : (std::isinf(p) ? 1.0 : p / (p - 1.0));
      std::size_t best_row = 0;
      double best_row_val = -1.0;
      for (std::size_t i = 0; i < r; ++i) {
        std::vector<double> row(m.row(i), m.row(i) + c);
        const double v = lp_of(row, q);
        if (v > best_row_val) {
          best_row_val = v;
          best_row = i;
        }
      }
      if (p == 1.0) {
        std::size_t arg = 0;
        for (std::size_t j = 0; j < c; ++j) {
          if (std::fabs(m(best_row, j)) > std::fabs(m(best_row, arg))) arg = j;
        }
        std::fill(x.begin(), x.end(), 0.0);
        x[arg] = m(best_row, arg) >= 0.0 ? 1.0 : -1.0;
      } else if (std::isinf(p)) {
        for (std::size_t j = 0; j < c; ++j) {
          const double v = m(best_row, j);
          x[j] = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
        }
      } else {  // p == 2
        double norm = 0.0;
        for (std::size_t j = 0; j < c; ++j) norm += m(best_row, j) * m(best_row, j);
        norm = std::sqrt(norm);
        for (std::size_t j = 0; j < c; ++j) x[j] = m(best_row, j) / norm;
      }
      y = kernels::matvec(m, x);
      worst_attain =
          std::max(worst_attain, std::fabs(lp_of(y, NormSpec::kInf) - n_row) / n_row);
    }
  }
  const double worst = std::max(worst_excess, worst_attain);
  return make_result("norms", "induced_norm_formulas_tight", worst <= 1e-12, worst);
}

CheckResult check_dual_lmo_alignment(Rng rng) {
  struct Case {
    NormSpec spec;
    std::size_t rows, cols;
  };
  const Case cases[] = {
      {NormSpec::vector_lp(1.0), 9, 1},
      {NormSpec::vector_lp(2.0), 9, 1},
      {NormSpec::vector_lp(3.0), 9, 1},
      {NormSpec::vector_lp(NormSpec::kInf), 9, 1},
      {NormSpec::vector_rms(), 9, 1},
      {NormSpec::frobenius(), 4, 5},
      {NormSpec::spectral(), 4, 5},
      {NormSpec::schatten(3.0), 4, 5},
      {NormSpec::max_abs_entry(), 4, 5},
      {NormSpec::induced_l1_to_lp(2.0), 4, 5},
      {NormSpec::induced_lp_to_linf(1.0), 4, 5},
      {NormSpec::rms_to_rms(), 4, 5},
      {NormSpec::l1_to_rms(), 4, 5},
  };
  double worst = 0.0;
  for (const Case& c : cases) {
    for (int rep = 0; rep < 10; ++rep) {
      Matrix g = gaussian_matrix(rng, c.rows, c.cols);
      const double dual = dual_norm(g, c.spec);
      Matrix t = lmo_direction(g, c.spec);
      const double primal =
          c.spec.vector_only() ? vector_norm(t, c.spec) : matrix_norm(t, c.spec);
      worst = std::max(worst, std::fabs(primal - 1.0));
      worst = std::max(worst, rel_gap(dot(g, t), dual));
    }
  }
  return make_result("norms", "dual_lmo_alignment", worst <= 1e-10, worst);
}

CheckResult check_max_of_max_flatten_identity(Rng rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    LayerList layers;
    const int n_layers = 2 + int(rng.next_u64() % 3);
    for (int l = 0; l < n_layers; ++l) {
      layers.push_back(gaussian_matrix(rng, 1 + rng.next_u64() % 4, 1 + rng.next_u64() % 4));
    }
    const double a = max_of_max_norm(layers);
    const double b = vector_norm(flatten(layers), NormSpec::vector_lp(NormSpec::kInf));
    worst = std::max(worst, std::fabs(a - b));
  }
  return make_result("norms", "max_of_max_flatten_identity", worst == 0.0, worst);
}

CheckResult check_scaled_norm_coherence(Rng rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 10; ++rep) {
    const std::size_t m = 3 + rng.next_u64() % 4;
    const std::size_t n = 3 + rng.next_u64() % 4;
    Matrix g = gaussian_matrix(rng, m, n);
    const double ratio = std::sqrt(double(n) / double(m));

    const double spec_norm = matrix_norm(g, NormSpec::spectral());
    worst = std::max(worst, rel_gap(matrix_norm(g, NormSpec::rms_to_rms()),
                                    ratio * spec_norm));
    worst = std::max(worst, rel_gap(dual_norm(g, NormSpec::rms_to_rms()),
                                    dual_norm(g, NormSpec::spectral()) / ratio));

    double best_col = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      double sq = 0.0;
      for (std::size_t i = 0; i < m; ++i) sq += g(i, j) * g(i, j);
      best_col = std::max(best_col, std::sqrt(sq));
    }
    worst = std::max(worst, rel_gap(matrix_norm(g, NormSpec::l1_to_rms()),
                                    best_col / std::sqrt(double(m))));
    worst = std::max(worst,
                     rel_gap(dual_norm(g, NormSpec::l1_to_rms()),
                             std::sqrt(double(m)) *
                                 dual_norm(g, NormSpec::induced_l1_to_lp(2.0))));

    Matrix v = gaussian_matrix(rng, 7, 1);
    worst = std::max(worst, rel_gap(vector_norm(v, NormSpec::vector_rms()),
                                    vector_norm(v, NormSpec::vector_lp(2.0)) /
                                        std::sqrt(7.0)));
    worst = std::max(worst, rel_gap(dual_norm(v, NormSpec::vector_rms()),
                                    std::sqrt(7.0) *
                                        dual_norm(v, NormSpec::vector_lp(2.0))));
  }
  return make_result("norms", "scaled_norm_coherence", worst <= 1e-10, worst);
}

CheckResult check_norm_axioms(Rng rng) {
  struct Case {
    NormSpec spec;
    std::size_t rows, cols;
  };
  const Case cases[] = {
      {NormSpec::vector_lp(1.0), 9, 1},
      {NormSpec::vector_lp(2.0), 9, 1},
      {NormSpec::vector_lp(3.0), 9, 1},
      {NormSpec::vector_lp(NormSpec::kInf), 9, 1},
      {NormSpec::vector_rms(), 9, 1},
      {NormSpec::frobenius(), 4, 5},
      {NormSpec::spectral(), 4, 5},
      {NormSpec::schatten(3.0), 4, 5},
      {NormSpec::max_abs_entry(), 4, 5},
      {NormSpec::induced_l1_to_lp(2.0), 4, 5},
      {NormSpec::induced_lp_to_linf(2.0), 4, 5},
      {NormSpec::rms_to_rms(), 4, 5},
      {NormSpec::l1_to_rms(), 4, 5},
  };
  const double alphas[] = {-2.5, 0.5, 3.0};
  double worst = 0.0;
  for (const Case& c : cases) {
    auto norm_of = [&](const Matrix& x) {
      return c.spec.vector_only() ? vector_norm(x, c.spec) : matrix_norm(x, c.spec);
    };
    for (int rep = 0; rep < 10; ++rep) {
      Matrix g = gaussian_matrix(rng, c.rows, c.cols);
      Matrix h = gaussian_matrix(rng, c.rows, c.cols);
      const double ng = norm_of(g);
      const double nh = norm_of(h);
      for (double a : alphas) {
        worst = std::max(worst, rel_gap(norm_of(g * a), std::fabs(a) * ng));
      }
      const double tri = norm_of(g + h) - (ng + nh);
      worst = std::max(worst, tri / std::max(1.0, ng + nh));
    }
  }
  return make_result("norms", "norm_axioms", worst <= 1e-9, worst);
}

// -------------------------------------------------------------- steepest --

double primal_norm(const Matrix& x, const NormSpec& spec) {
  return spec.vector_only() ? vector_norm(x, spec) : matrix_norm(x, spec);
}

CheckResult check_closed_form_beats_sampling(Rng rng) {
  struct Case {
    NormSpec spec;
    std::size_t rows, cols;
  };
  const Case cases[] = {
      {NormSpec::vector_lp(1.0), 16, 1},
      {NormSpec::vector_lp(2.0), 16, 1},
      {NormSpec::vector_lp(NormSpec::kInf), 16, 1},
      {NormSpec::vector_rms(), 16, 1},
      {NormSpec::frobenius(), 4, 4},
      {NormSpec::spectral(), 4, 4},
      {NormSpec::max_abs_entry(), 4, 4},
      {NormSpec::induced_l1_to_lp(2.0), 4, 4},
      {NormSpec::rms_to_rms(), 4, 4},
  };
  const int samples = 20000;
  const double lambda = 1.7;
  double worst = 0.0;
  for (const Case& c : cases) {
    Matrix g = gaussian_matrix(rng, c.rows, c.cols);
    SteepestSolution sol = solve_single(g, c.spec, lambda);
    const Matrix& delta = sol.updates[0];
    const double opt = dot(g, delta) +
                       0.5 * lambda * primal_norm(delta, c.spec) * primal_norm(delta, c.spec);
    worst = std::max(worst, rel_gap(opt, sol.objective_value));
    worst = std::max(worst,
                     rel_gap(sol.objective_value,
                             -sol.dual_values[0] * sol.dual_values[0] / (2.0 * lambda)));
    for (int s = 0; s < samples; ++s) {
      Matrix u = gaussian_matrix(rng, c.rows, c.cols);
      const double nu = primal_norm(u, c.spec);
      if (nu == 0.0) continue;
      const double rho = rng.uniform() * 2.0 * std::max(sol.step_size, 1e-12);
      Matrix cand = u * (-rho / nu);
      const double obj = dot(g, cand) + 0.5 * lambda * rho * rho;
      // No candidate may undercut the closed form beyond roundoff.
      worst = std::max(worst, (sol.objective_value - obj) /
                                  std::max(1.0, std::fabs(sol.objective_value)));
    }
  }

  // Modular instance: the aggregated step must beat per-layer sampling too.
  std::vector<ModularEntry> entries = {{1.5, NormSpec::spectral()},
                                       {0.7, NormSpec::max_abs_entry()}};
  ModularNormSpec mspec(entries);
  LayerList gs;
  gs.push_back(gaussian_matrix(rng, 2, 3));
  gs.push_back(gaussian_matrix(rng, 2, 2));
  SteepestSolution msol = solve_modular(gs, mspec, lambda);
  double direct = layers_dot(gs, msol.updates) +
                  0.5 * lambda * modular_norm(msol.updates, mspec) *
                      modular_norm(msol.updates, mspec);
  worst = std::max(worst, rel_gap(direct, msol.objective_value));
  for (int s = 0; s < samples; ++s) {
    LayerList cand;
    cand.push_back(gaussian_matrix(rng, 2, 3));
    cand.push_back(gaussian_matrix(rng, 2, 2));
    const double mn = modular_norm(cand, mspec);
    if (mn == 0.0) continue;
    const double rho = rng.uniform() * 2.0 * msol.step_size;
    for (Matrix& layer : cand) layer = layer * (-rho / mn);
    const double obj = layers_dot(gs, cand) + 0.5 * lambda * rho * rho;
    worst = std::max(worst, (msol.objective_value - obj) /
                                std::max(1.0, std::fabs(msol.objective_value)));
  }
  return make_result("steepest", "closed_form_beats_sampling", worst <= 1e-10, worst);
}

CheckResult check_modular_equalization(Rng rng) {
  const NormSpec norms[] = {NormSpec::spectral(), NormSpec::max_abs_entry(),
                            NormSpec::rms_to_rms()};
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::vector<ModularEntry> entries;
    LayerList gs;
    for (int l = 0; l < 3; ++l) {
      entries.push_back({0.5 + 1.5 * rng.uniform(), norms[l]});
      gs.push_back(gaussian_matrix(rng, 2 + rng.next_u64() % 3, 2 + rng.next_u64() % 3));
    }
    SteepestSolution sol = solve_modular(gs, ModularNormSpec(entries), 0.9);
    double lo = std::numeric_limits<double>::infinity();
    double hi = 0.0;
    for (int l = 0; l < 3; ++l) {
      const double scaled =
          entries[l].scale * matrix_norm(sol.updates[l], entries[l].norm);
      lo = std::min(lo, scaled);
      hi = std::max(hi, scaled);
    }
    worst = std::max(worst, (hi - lo) / std::max(hi, 1e-300));
    worst = std::max(worst, rel_gap(hi, sol.step_size));
  }
  return make_result("steepest", "modular_equalization", worst <= 1e-9, worst);
}

CheckResult check_gradient_scale_equivariance(Rng rng) {
  const NormSpec specs[] = {NormSpec::vector_lp(2.0), NormSpec::vector_lp(NormSpec::kInf),
                            NormSpec::spectral(), NormSpec::max_abs_entry(),
                            NormSpec::l1_to_rms()};
  double worst = 0.0;
  for (const NormSpec& spec : specs) {
    const bool vec = spec.vector_only();
    Matrix g = gaussian_matrix(rng, vec ? 12 : 4, vec ? 1 : 5);
    SteepestSolution base = solve_single(g, spec, 1.3);
    for (double c : {0.25, 3.0}) {
      SteepestSolution scaled = solve_single(g * c, spec, 1.3);
      worst = std::max(worst, rel_gap(scaled.step_size, c * base.step_size));
      Matrix expected = base.updates[0] * c;
      worst = std::max(worst, max_abs_diff(scaled.updates[0], expected) /
                                  std::max(1.0, max_abs(expected)));
    }
  }
  return make_result("steepest", "gradient_scale_equivariance", worst <= 1e-12, worst);
}

// Doubling the sharpness must halve the step and the update bit for bit:
// scaling by powers of two commutes with rounding.
CheckResult check_sharpness_halves_step(Rng rng) {
  const NormSpec specs[] = {NormSpec::vector_lp(2.0), NormSpec::spectral(),
                            NormSpec::max_abs_entry()};
  bool exact = true;
  double worst = 0.0;
  for (const NormSpec& spec : specs) {
    const bool vec = spec.vector_only();
    for (int rep = 0; rep < 5; ++rep) {
      Matrix g = gaussian_matrix(rng, vec ? 12 : 4, vec ? 1 : 5);
      const double lambda = 0.3 + rng.uniform();
      SteepestSolution a = solve_single(g, spec, lambda);
      SteepestSolution b = solve_single(g, spec, 2.0 * lambda);
      if (b.step_size != 0.5 * a.step_size) exact = false;
      worst = std::max(worst, std::fabs(b.step_size - 0.5 * a.step_size));
      for (std::size_t i = 0; i < a.updates[0].size(); ++i) {
        const double half = 0.5 * a.updates[0].data()[i];
        if (b.updates[0].data()[i] != half) exact = false;
        worst = std::max(worst, std::fabs(b.updates[0].data()[i] - half));
      }
    }
  }
  return make_result("steepest", "sharpness_halves_step", exact, worst);
}

CheckResult check_max_of_max_matches_flat_solve(Rng rng) {
  double worst = 0.0;
  for (int rep = 0; rep < 50; ++rep) {
    LayerList gs;
    const int n_layers = 2 + int(rng.next_u64() % 3);
    for (int l = 0; l < n_layers; ++l) {
      gs.push_back(gaussian_matrix(rng, 1 + rng.next_u64() % 4, 1 + rng.next_u64() % 4));
    }
    const double lambda = 0.8;
    SteepestSolution layered = solve_max_of_max(gs, lambda);
    SteepestSolution flat =
        solve_single(flatten(gs), NormSpec::vector_lp(NormSpec::kInf), lambda);
    worst = std::max(worst, rel_gap(layered.step_size, flat.step_size));
    Matrix stacked = flatten(layered.updates);
    worst = std::max(worst, max_abs_diff(stacked, flat.updates[0]) /
                                std::max(1.0, max_abs(flat.updates[0])));
  }
  return make_result("steepest", "max_of_max_matches_flat_solve", worst <= 1e-12, worst);
}

// ------------------------------------------------------------ optimizers --

CheckResult check_ema_free_reductions(Rng rng) {
  double worst_ulp = 0.0;
  double worst_rel = 0.0;

  // Adam with both EMAs off and no stabilizer is sign descent.
  for (int rep = 0; rep < 100; ++rep) {
    LayerList w = {gaussian_matrix(rng, 3, 4), gaussian_matrix(rng, 5, 1)};
    LayerList g = {gaussian_matrix(rng, 3, 4), gaussian_matrix(rng, 5, 1)};
    LayerList wa = w;
    LayerList ws = w;
    AdamState adam;
    adam.beta1 = 0.0;
    adam.beta2 = 0.0;
    adam.epsilon = 0.0;
    adam.lr = 0.25;
    adam_step(wa, g, adam);
    sign_descent_step(ws, g, 0.25);
    for (std::size_t l = 0; l < w.size(); ++l) {
      for (std::size_t i = 0; i < w[l].size(); ++i) {
        worst_ulp = std::max(worst_ulp,
                             double(ulp_distance(wa[l].data()[i], ws[l].data()[i])));
      }
    }
  }

  // Shampoo from a zero state with no regularizer is the orthogonalized step.
  for (int rep = 0; rep < 20; ++rep) {
    LayerList w = {gaussian_matrix(rng, 4, 3)};
    LayerList g = {conditioned_matrix(rng, 4, 3, 1.0 + rng.uniform() * 9.0)};
    LayerList wa = w;
    LayerList wb = w;
    ShampooState shampoo;
    shampoo.lr = 0.3;
    shampoo.epsilon = 0.0;
    shampoo_step(wa, g, shampoo);
    spectral_descent_step(wb, g, 0.3, SpectralDescentBackend::svd());
    worst_rel = std::max(worst_rel, frobenius_norm(wa[0] - wb[0]) /
                                        std::max(1.0, frobenius_norm(wb[0])));
  }

  // Prodigy with EMAs off follows the max rule on the measured displacement.
  {
    LayerList w = {gaussian_matrix(rng, 6, 1)};
    ProdigyState prodigy;
    prodigy.beta1 = 0.0;
    prodigy.beta2 = 0.0;
    prodigy.epsilon = 0.0;
    prodigy.eta = 1e-4;
    LayerList w0 = w;
    for (int t = 0; t < 40; ++t) {
      LayerList g = {gaussian_matrix(rng, 6, 1)};
      const double eta_before = prodigy.eta;
      prodigy_step(w, g, prodigy);
      double num = 0.0;
      double den = 0.0;
      for (std::size_t i = 0; i < g[0].size(); ++i) {
        num += g[0].data()[i] * (w0[0].data()[i] - w[0].data()[i]);
        den += std::fabs(g[0].data()[i]);
      }
      const double expected = std::max(eta_before, num / den);
      worst_rel = std::max(worst_rel, rel_gap(prodigy.eta, expected));
    }
  }

  const bool pass = worst_ulp <= 1.0 && worst_rel <= 1e-8;
  std::ostringstream detail;
  detail << "max ulp " << worst_ulp << ", max rel gap " << worst_rel;
  return make_result("optimizers", "ema_free_reductions", pass,
                     std::max(worst_ulp * 1e-16, worst_rel), detail.str());
}

CheckResult check_prodigy_step_size_monotone(Rng rng) {
  LayerList w = {gaussian_matrix(rng, 4, 3)};
  ProdigyState state;  // default betas and epsilon
  double worst = 0.0;
  double prev = state.eta;
  for (int t = 0; t < 1000; ++t) {
    LayerList g = {gaussian_matrix(rng, 4, 3)};
    prodigy_step(w, g, state);
    worst = std::max(worst, prev - state.eta);
    prev = state.eta;
  }
  return make_result("optimizers", "prodigy_step_size_monotone", worst <= 0.0, worst);
}

// 1-D constant gradient, EMAs off: each step size equals the total progress
// so far, so eta doubles every step once it starts moving. With a
// power-of-two starting value every quantity stays exact.
CheckResult check_prodigy_warmup_doubles(Rng) {
  LayerList w = {Matrix(1, 1)};
  LayerList g = {Matrix(1, 1, {1.0})};
  ProdigyState state;
  state.beta1 = 0.0;
  state.beta2 = 0.0;
  state.epsilon = 0.0;
  state.eta = std::ldexp(1.0, -20);
  std::vector<double> etas = {state.eta};
  for (int t = 0; t < 30; ++t) {
    prodigy_step(w, g, state);
    etas.push_back(state.eta);
  }
  bool exact = true;
  double worst = 0.0;
  // etas[t] is eta_{t+1}; the doubling regime starts at the third step.
  for (std::size_t t = 2; t + 1 < etas.size(); ++t) {
    if (etas[t + 1] != 2.0 * etas[t]) exact = false;
    worst = std::max(worst, std::fabs(etas[t + 1] - 2.0 * etas[t]));
  }
  if (etas[1] != etas[0] || etas[2] != 2.0 * etas[1]) exact = false;
  return make_result("optimizers", "prodigy_warmup_doubles", exact, worst);
}

CheckResult check_shampoo_accumulators_symmetric(Rng rng) {
  LayerList w = {gaussian_matrix(rng, 4, 3), gaussian_matrix(rng, 2, 5)};
  ShampooState state;
  state.lr = 1e-2;
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    LayerList g = {gaussian_matrix(rng, 4, 3), gaussian_matrix(rng, 2, 5)};
    shampoo_step(w, g, state);
    for (const auto& accs : {state.l_acc, state.r_acc}) {
      for (const Matrix& a : accs) {
        worst = std::max(worst, max_abs_diff(a, transpose(a)));
      }
    }
  }
  return make_result("optimizers", "shampoo_accumulators_symmetric", worst <= 1e-10,
                     worst);
}

CheckResult check_sign_step_rms_equals_lr(Rng rng) {
  double worst = 0.0;
  bool exact = true;
  for (int rep = 0; rep < 20; ++rep) {
    Matrix g = gaussian_matrix(rng, 16, 1);
    for (double& v : g.data()) {
      if (v == 0.0) v = 1.0;  // keep the sign pattern dense
    }
    // Zero start so the displacement read back by subtraction is the update
    // itself, with no cancellation against the incumbent weights.
    LayerList w = {Matrix(16, 1)};
    LayerList before = w;
    const double lr = std::ldexp(1.0, -3 - int(rng.next_u64() % 8));
    sign_descent_step(w, {g}, lr);
    const double rms = vector_norm(w[0] - before[0], NormSpec::vector_rms());
    if (rms != lr) exact = false;
    worst = std::max(worst, std::fabs(rms - lr));
  }
  return make_result("optimizers", "sign_step_rms_equals_lr", exact, worst);
}

// ---------------------------------------------------------------- models --

CheckResult check_square_loss_majorization(Rng rng) {
  const std::size_t shapes[][2] = {{4, 4}, {8, 2}, {2, 8}};
  double worst = 0.0;  // most negative gap, sign-flipped
  for (auto [din, dout] : shapes) {
    for (int rep = 0; rep < 1000; ++rep) {
      Dataset data = make_dataset(din, dout, 6, rng.next_u64() | 1, 0.3);
      LinearModel model{gaussian_matrix(rng, dout, din)};
      Matrix delta = gaussian_matrix(rng, dout, din) * (0.01 + rng.uniform());
      const double gap = majorization_gap(model, delta, data);
      worst = std::max(worst, -gap);
    }
  }
  return make_result("models", "square_loss_majorization", worst <= 1e-10, worst);
}

CheckResult check_spectral_descent_monotone(Rng rng) {
  double worst = 0.0;
  for (int task = 0; task < 10; ++task) {
    const std::size_t din = 6, dout = 3;
    Dataset data = make_dataset(din, dout, 24, rng.next_u64() | 1, 0.1);
    LinearModel model{gaussian_matrix(rng, dout, din)};
    const double lambda = double(din) / double(dout);
    double prev = square_loss(model, data);
    for (int step = 0; step < 100; ++step) {
      Matrix g = square_loss_grad(model, data);
      if (is_zero(g)) break;
      SteepestSolution sol = solve_single(g, NormSpec::spectral(), lambda);
      model.w = model.w + sol.updates[0];
      const double next = square_loss(model, data);
      worst = std::max(worst, (next - prev) / std::max(1.0, prev));
      prev = next;
    }
  }
  return make_result("models", "spectral_descent_monotone", worst <= 1e-12, worst);
}

CheckResult check_gradients_match_finite_differences(Rng rng) {
  const double h = 1e-5;
  double worst_linear = 0.0;
  double worst_two = 0.0;

  for (int probe = 0; probe < 50; ++probe) {
    Dataset data = make_dataset(5, 3, 8, rng.next_u64() | 1, 0.2);
    LinearModel model{gaussian_matrix(rng, 3, 5)};
    Matrix g = square_loss_grad(model, data);
    const std::size_t i = rng.next_u64() % g.rows();
    const std::size_t j = rng.next_u64() % g.cols();
    LinearModel up = model, down = model;
    up.w(i, j) += h;
    down.w(i, j) -= h;
    const double fd = (square_loss(up, data) - square_loss(down, data)) / (2.0 * h);
    worst_linear =
        std::max(worst_linear, std::fabs(fd - g(i, j)) / std::max(1.0, std::fabs(g(i, j))));
  }

  for (int probe = 0; probe < 50; ++probe) {
    Dataset data = make_dataset(4, 2, 6, rng.next_u64() | 1, 0.2);
    TwoLayerNet net{gaussian_matrix(rng, 5, 4), gaussian_matrix(rng, 2, 5)};
    // Stay away from the ramp kink so the finite difference sees a smooth
    // function: shift any tiny pre-activation off zero.
    Matrix pre = kernels::matmul_transb(data.inputs(), net.w1);
    bool near_kink = false;
    for (double v : pre.data()) {
      if (std::fabs(v) < 1e-3) near_kink = true;
    }
    if (near_kink) continue;
    auto [loss, grads] = two_layer_forward_backward(net, data);
    (void)loss;
    for (int layer = 0; layer < 2; ++layer) {
      Matrix& target = layer == 0 ? net.w1 : net.w2;
      const Matrix& g = grads[std::size_t(layer)];
      const std::size_t i = rng.next_u64() % g.rows();
      const std::size_t j = rng.next_u64() % g.cols();
      const double saved = target(i, j);
      target(i, j) = saved + h;
      const double up = two_layer_forward_backward(net, data).first;
      target(i, j) = saved - h;
      const double down = two_layer_forward_backward(net, data).first;
      target(i, j) = saved;
      const double fd = (up - down) / (2.0 * h);
      worst_two =
          std::max(worst_two, std::fabs(fd - g(i, j)) / std::max(1.0, std::fabs(g(i, j))));
    }
  }

  const bool pass = worst_linear <= 1e-6 && worst_two <= 1e-5;
  std::ostringstream detail;
  detail << "linear " << worst_linear << ", two-layer " << worst_two;
  return make_result("models", "gradients_match_finite_differences", pass,
                     std::max(worst_linear, worst_two), detail.str());
}

// ----------------------------------------------------------------- suites --

using CheckFn = CheckResult (*)(Rng);

struct NamedCheck {
  const char* suite;
  const char* name;
  CheckFn fn;
};

const NamedCheck kChecks[] = {
    {"linalg", "svd_reconstructs_input", check_svd_reconstructs_input},
    {"linalg", "orthogonalize_backends_agree", check_orthogonalize_backends_agree},
    {"linalg", "inverse_root_orthogonalization_identity",
     check_inverse_root_orthogonalization_identity},
    {"linalg", "newton_schulz_diagonal_scalar_action",
     check_newton_schulz_diagonal_scalar_action},
    {"linalg", "spd_inverse_root_inverts", check_spd_inverse_root_inverts},
    {"norms", "induced_norm_formulas_tight", check_induced_norm_formulas_tight},
    {"norms", "dual_lmo_alignment", check_dual_lmo_alignment},
    {"norms", "max_of_max_flatten_identity", check_max_of_max_flatten_identity},
    {"norms", "scaled_norm_coherence", check_scaled_norm_coherence},
    {"norms", "norm_axioms", check_norm_axioms},
    {"steepest", "closed_form_beats_sampling", check_closed_form_beats_sampling},
    {"steepest", "modular_equalization", check_modular_equalization},
    {"steepest", "gradient_scale_equivariance", check_gradient_scale_equivariance},
    {"steepest", "sharpness_halves_step", check_sharpness_halves_step},
    {"steepest", "max_of_max_matches_flat_solve", check_max_of_max_matches_flat_solve},
    {"optimizers", "ema_free_reductions", check_ema_free_reductions},
    {"optimizers", "prodigy_step_size_monotone", check_prodigy_step_size_monotone},
    {"optimizers", "prodigy_warmup_doubles", check_prodigy_warmup_doubles},
    {"optimizers", "shampoo_accumulators_symmetric",
     check_shampoo_accumulators_symmetric},
    {"optimizers", "sign_step_rms_equals_lr", check_sign_step_rms_equals_lr},
    {"models", "square_loss_majorization", check_square_loss_majorization},
    {"models", "spectral_descent_monotone", check_spectral_descent_monotone},
    {"models", "gradients_match_finite_differences",
     check_gradients_match_finite_differences},
};

}  // namespace

const std::vector<std::string>& verify_suites() {
  static const std::vector<std::string> suites = {"linalg", "norms", "steepest",
                                                  "optimizers", "models"};
  return suites;
}

std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed) {
  const auto& known = verify_suites();
  if (suite != "all" &&
      std::find(known.begin(), known.end(), suite) == known.end()) {
    std::string msg = "unknown suite '" + suite + "'; valid suites: all";
    for (const std::string& s : known) msg += ", " + s;
    throw ValidationError(msg);
  }
  std::vector<CheckResult> results;
  const Rng root(seed);
  for (const NamedCheck& check : kChecks) {
    if (suite != "all" && suite != check.suite) continue;
    results.push_back(check.fn(root.split(check.name)));
  }
  return results;
}

}  // namespace normdescent
