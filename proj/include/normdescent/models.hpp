#pragma once

#include <cstdint>
#include <string>
#include <utility>

#include "normdescent/matrix.hpp"

namespace normdescent {

// Samples are stored one per row: inputs is n x d_in, targets is n x d_out.
// Construction enforces the input normalization ||x_i||_2 = sqrt(d_in) that
// the square-loss curvature bound is stated under.
class Dataset {
 public:
  Dataset(Matrix inputs, Matrix targets);

  const Matrix& inputs() const { return inputs_; }
  const Matrix& targets() const { return targets_; }
  std::size_t size() const { return inputs_.rows(); }
  std::size_t d_in() const { return inputs_.cols(); }
  std::size_t d_out() const { return targets_.cols(); }

 private:
  Matrix inputs_;
  Matrix targets_;
};

// Gaussian inputs rescaled to ||x_i||_2 = sqrt(d_in) exactly; targets come
// from a hidden random linear map plus optional isotropic Gaussian noise.
// Deterministic in the seed: inputs, map, and noise draw from named
// substreams so adding noise never shifts the inputs.
Dataset make_dataset(std::size_t d_in, std::size_t d_out, std::size_t n,
                     std::uint64_t seed, double noise = 0.0);

// CSV layout: header x0..x{d_in-1},y0..y{d_out-1}, one row per sample.
std::string dataset_to_csv(const Dataset& data);
Dataset dataset_from_csv(const std::string& text);

struct LinearModel {
  Matrix w;  // d_out x d_in
};

struct TwoLayerNet {
  Matrix w1;  // hidden x d_in
  Matrix w2;  // d_out x hidden
};

// (1 / 2n d_out) sum_i ||y_i - W x_i||_2^2.
double square_loss(const LinearModel& model, const Dataset& data);

// Exact gradient (1 / n d_out) sum_i (W x_i - y_i) x_i^T.
Matrix square_loss_grad(const LinearModel& model, const Dataset& data);

// Slack of the quadratic upper bound
//   L(W + D) <= L(W) + <grad, D> + (1/2)(d_in/d_out) ||D||_spectral^2,
// i.e. right-hand side minus left. Nonnegative (up to roundoff) for inputs
// with the normalization enforced by Dataset.
double majorization_gap(const LinearModel& model, const Matrix& delta,
                        const Dataset& data);

// Square loss through w2 * ramp(w1 * x) and exact gradients for both layers
// via reverse accumulation. The ramp subgradient at 0 is taken as 0.
std::pair<double, LayerList> two_layer_forward_backward(const TwoLayerNet& net,
                                                        const Dataset& data);

}  // namespace normdescent
