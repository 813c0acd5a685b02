#include "normdescent/steepest.hpp"

#include <cmath>
#include <cstddef>

#include "normdescent/errors.hpp"
#include "normdescent/linalg.hpp"

namespace normdescent {
namespace {

void require_positive_sharpness(double lambda) {
  if (!(lambda > 0.0) || !std::isfinite(lambda)) {
    throw ValidationError("sharpness lambda must be positive and finite");
  }
}

Matrix zeros_like(const Matrix& g) { return Matrix(g.rows(), g.cols()); }

}  // namespace

SteepestSolution solve_single(const Matrix& g, const NormSpec& spec, double lambda) {
  require_positive_sharpness(lambda);
  SteepestSolution out;
  if (is_zero(g)) {
    out.updates.push_back(zeros_like(g));
    out.step_size = 0.0;
    out.dual_values.push_back(0.0);
    out.objective_value = 0.0;
    return out;
  }
  const double dual = dual_norm(g, spec);
  const double eta = dual / lambda;
  Matrix dir = lmo_direction(g, spec);
  out.updates.push_back(dir * (-eta));
  out.step_size = eta;
  out.dual_values.push_back(dual);
  // At the optimum the linear term is -eta * dual and the penalty is
  // (lambda/2) eta^2, which collapse to -dual^2 / (2 lambda).
  out.objective_value = -(dual * dual) / (2.0 * lambda);
  return out;
}

SteepestSolution solve_modular(const LayerList& gs, const ModularNormSpec& spec,
                               double lambda) {
  require_positive_sharpness(lambda);
  if (gs.size() != spec.entries().size()) {
    throw ShapeError("modular solve: layer count does not match norm spec");
  }
  SteepestSolution out;
  out.dual_values.reserve(gs.size());

  // eta = (1/lambda) sum_l dual_l / s_l, accumulated in layer order.
  double weighted_dual_sum = 0.0;
  for (std::size_t l = 0; l < gs.size(); ++l) {
    const ModularEntry& entry = spec.entries()[l];
    const double dual = is_zero(gs[l]) ? 0.0 : dual_norm(gs[l], entry.norm);
    out.dual_values.push_back(dual);
    weighted_dual_sum += dual / entry.scale;
  }
  const double eta = weighted_dual_sum / lambda;

  out.updates.reserve(gs.size());
  for (std::size_t l = 0; l < gs.size(); ++l) {
    if (out.dual_values[l] == 0.0) {
      out.updates.push_back(zeros_like(gs[l]));
      continue;
    }
    const ModularEntry& entry = spec.entries()[l];
    Matrix dir = lmo_direction(gs[l], entry.norm);
    out.updates.push_back(dir * (-eta / entry.scale));
  }
  out.step_size = eta;
  // <g, dw> = -eta * sum_l dual_l / s_l and the penalty term is
  // (lambda/2) eta^2; with eta = sum/lambda these do not cancel to a single
  // square here because we keep the exact accumulation order of the sum.
  out.objective_value = -eta * weighted_dual_sum + 0.5 * lambda * eta * eta;
  return out;
}

namespace {

SteepestSolution solve_uniform(const LayerList& gs, const NormSpec& norm,
                               double lambda) {
  std::vector<ModularEntry> entries;
  entries.reserve(gs.size());
  for (std::size_t l = 0; l < gs.size(); ++l) entries.push_back({1.0, norm});
  return solve_modular(gs, ModularNormSpec(entries), lambda);
}

}  // namespace

SteepestSolution solve_max_of_max(const LayerList& gs, double lambda) {
  return solve_uniform(gs, NormSpec::max_abs_entry(), lambda);
}

SteepestSolution solve_spectral_layers(const LayerList& gs, double lambda) {
  return solve_uniform(gs, NormSpec::spectral(), lambda);
}

namespace {

Matrix expected_l2(const Matrix& g, double lambda) {
  double sq = 0.0;
  for (double v : g.data()) sq += v * v;
  const double n2 = std::sqrt(sq);
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.data()[i] = -(n2 / lambda) * (g.data()[i] / n2);
  }
  return out;
}

Matrix expected_linf(const Matrix& g, double lambda) {
  double l1 = 0.0;
  for (double v : g.data()) l1 += std::fabs(v);
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    const double v = g.data()[i];
    const double s = v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0);
    out.data()[i] = -(l1 / lambda) * s;
  }
  return out;
}

Matrix expected_frobenius(const Matrix& g, double lambda) {
  const double nf = frobenius_norm(g);
  Matrix out(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) {
    out.data()[i] = -(nf / lambda) * (g.data()[i] / nf);
  }
  return out;
}

Matrix expected_spectral(const Matrix& g, double lambda) {
  SvdFactors f = reduced_svd(g);
  double trace = 0.0;
  for (double s : f.sigma) trace += s;
  Matrix uvt = kernels::matmul_transb(f.u, f.v);
  return uvt * (-trace / lambda);
}

}  // namespace

std::vector<NormTableRow> reference_table() {
  return {
      {"vector", "l2", NormSpec::vector_lp(2.0), "normalized gradient",
       &expected_l2},
      {"vector", "linf", NormSpec::vector_lp(NormSpec::kInf), "sign descent",
       &expected_linf},
      {"matrix", "frobenius", NormSpec::frobenius(), "normalized matrix gradient",
       &expected_frobenius},
      {"matrix", "spectral", NormSpec::spectral(), "orthogonalized gradient",
       &expected_spectral},
  };
}

}  // namespace normdescent
