#pragma once

#include <string>
#include <vector>

#include "normdescent/norms.hpp"

namespace normdescent {

// Exact minimizer of <g, dw> + (lambda/2) ||dw||^2: the update is
// -(||g||^dagger / lambda) times a unit-norm maximizer of <g, t>, so the step
// size is the dual norm over the sharpness and the direction solves the LMO.
struct SteepestSolution {
  LayerList updates;
  double step_size;                 // eta
  std::vector<double> dual_values;  // per layer, ||G_l||^dagger under its norm
  double objective_value;           // value of the model at the returned update
};

// Single norm on a single tensor. Zero gradient returns a zero update with
// step size 0. lambda must be strictly positive; a zero sharpness makes the
// problem unbounded and is rejected.
SteepestSolution solve_single(const Matrix& g, const NormSpec& spec, double lambda);

// Norm max_l s_l ||W_l||_l over a layer list. The step size aggregates the
// per-layer duals, eta = (1/lambda) * sum_l (1/s_l) ||G_l||^dagger_l, and
// layer l moves by -(eta/s_l) times its LMO direction. Layers with zero
// gradient stay put and contribute nothing to the sum.
SteepestSolution solve_modular(const LayerList& gs, const ModularNormSpec& spec,
                               double lambda);

// Modular solve with unit scales and the max-abs-entry norm everywhere:
// global sign descent with eta = (1/lambda) * sum_l ||G_l||_{entrywise l1}.
SteepestSolution solve_max_of_max(const LayerList& gs, double lambda);

// Modular solve with unit scales and the spectral norm everywhere: per-layer
// orthogonalized updates sharing one aggregated step size.
SteepestSolution solve_spectral_layers(const LayerList& gs, double lambda);

// One row of the reference catalogue of classic norm/optimizer pairs:
// l2 -> normalized gradient, linf -> sign descent, Frobenius -> normalized
// matrix gradient, spectral -> orthogonalized gradient. expected_update
// computes the closed form directly so solve_single can be checked against it.
struct NormTableRow {
  std::string domain;  // "vector" or "matrix"
  std::string norm_name;
  NormSpec norm;
  std::string solution;
  Matrix (*expected_update)(const Matrix& g, double lambda);
};

std::vector<NormTableRow> reference_table();

}  // namespace normdescent
