#include "normdescent/models.hpp"

#include <cmath>
#include <cstddef>
#include <sstream>

#include "normdescent/errors.hpp"
#include "normdescent/io.hpp"
#include "normdescent/kernels.hpp"
#include "normdescent/norms.hpp"
#include "normdescent/rng.hpp"

namespace normdescent {
namespace {

double row_l2(const Matrix& m, std::size_t r) {
  double sq = 0.0;
  const double* row = m.row(r);
  for (std::size_t c = 0; c < m.cols(); ++c) sq += row[c] * row[c];
  return std::sqrt(sq);
}

// Residual P - Y with P = X W^T, i.e. predictions one per row.
Matrix residual(const Matrix& w, const Dataset& data) {
  Matrix p = kernels::matmul_transb(data.inputs(), w);
  return p - data.targets();
}

}  // namespace

Dataset::Dataset(Matrix inputs, Matrix targets)
    : inputs_(std::move(inputs)), targets_(std::move(targets)) {
  if (inputs_.size() == 0 || targets_.size() == 0) {
    throw ValidationError("dataset must contain at least one sample");
  }
  if (inputs_.rows() != targets_.rows()) {
    throw ShapeError("dataset inputs and targets disagree on sample count");
  }
  const double want = std::sqrt(double(inputs_.cols()));
  for (std::size_t r = 0; r < inputs_.rows(); ++r) {
    if (std::fabs(row_l2(inputs_, r) - want) > 1e-10) {
      throw ValidationError("dataset input row " + std::to_string(r) +
                            " is not normalized to sqrt(d_in)");
    }
  }
}

Dataset make_dataset(std::size_t d_in, std::size_t d_out, std::size_t n,
                     std::uint64_t seed, double noise) {
  if (n == 0) throw ValidationError("make_dataset: n must be positive");
  if (d_in == 0 || d_out == 0) {
    throw ValidationError("make_dataset: dimensions must be positive");
  }
  Rng root(seed);
  Rng input_rng = root.split("inputs");
  Rng map_rng = root.split("map");
  Rng noise_rng = root.split("noise");

  const double want = std::sqrt(double(d_in));
  Matrix x(n, d_in);
  for (std::size_t r = 0; r < n; ++r) {
    double* row = x.row(r);
    for (std::size_t c = 0; c < d_in; ++c) row[c] = input_rng.gaussian();
    double norm = 0.0;
    for (std::size_t c = 0; c < d_in; ++c) norm += row[c] * row[c];
    norm = std::sqrt(norm);
    if (norm == 0.0) {
      row[0] = want;  // degenerate draw; any unit-scale direction will do
      continue;
    }
    const double scale = want / norm;
    for (std::size_t c = 0; c < d_in; ++c) row[c] *= scale;
  }

  Matrix hidden(d_out, d_in);
  const double map_scale = 1.0 / want;
  for (double& v : hidden.data()) v = map_rng.gaussian() * map_scale;

  // Same kernel as the square-loss forward pass, so noise-free targets are
  // interpolated exactly by the hidden map.
  Matrix y = kernels::matmul_transb(x, hidden);
  if (noise != 0.0) {
    for (double& v : y.data()) v += noise * noise_rng.gaussian();
  }
  return Dataset(std::move(x), std::move(y));
}

std::string dataset_to_csv(const Dataset& data) {
  std::ostringstream out;
  for (std::size_t c = 0; c < data.d_in(); ++c) {
    if (c > 0) out << ',';
    out << 'x' << c;
  }
  for (std::size_t c = 0; c < data.d_out(); ++c) out << ",y" << c;
  out << '\n';
  for (std::size_t r = 0; r < data.size(); ++r) {
    for (std::size_t c = 0; c < data.d_in(); ++c) {
      if (c > 0) out << ',';
      out << io::format_double(data.inputs()(r, c));
    }
    for (std::size_t c = 0; c < data.d_out(); ++c) {
      out << ',' << io::format_double(data.targets()(r, c));
    }
    out << '\n';
  }
  return out.str();
}

Dataset dataset_from_csv(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  if (!std::getline(in, line)) {
    throw ValidationError("dataset csv is empty");
  }
  std::size_t d_in = 0;
  std::size_t d_out = 0;
  {
    std::istringstream header(line);
    std::string field;
    while (std::getline(header, field, ',')) {
      if (!field.empty() && field.front() == 'x' && d_out == 0) {
        ++d_in;
      } else if (!field.empty() && field.front() == 'y') {
        ++d_out;
      } else {
        throw ValidationError("dataset csv header must list x columns then y columns");
      }
    }
  }
  if (d_in == 0 || d_out == 0) {
    throw ValidationError("dataset csv header must declare x and y columns");
  }
  std::vector<double> xs;
  std::vector<double> ys;
  std::size_t n = 0;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<double> row = io::parse_row(line);
    if (row.size() != d_in + d_out) {
      throw ValidationError("dataset csv row " + std::to_string(n + 1) +
                            " has the wrong number of fields");
    }
    xs.insert(xs.end(), row.begin(), row.begin() + std::ptrdiff_t(d_in));
    ys.insert(ys.end(), row.begin() + std::ptrdiff_t(d_in), row.end());
    ++n;
  }
  if (n == 0) throw ValidationError("dataset csv has no sample rows");
  return Dataset(Matrix(n, d_in, std::move(xs)), Matrix(n, d_out, std::move(ys)));
}

double square_loss(const LinearModel& model, const Dataset& data) {
  if (model.w.cols() != data.d_in() || model.w.rows() != data.d_out()) {
    throw ShapeError("square_loss: model shape does not match dataset");
  }
  Matrix r = residual(model.w, data);
  double sq = 0.0;
  for (double v : r.data()) sq += v * v;
  return sq / (2.0 * double(data.size()) * double(data.d_out()));
}

Matrix square_loss_grad(const LinearModel& model, const Dataset& data) {
  if (model.w.cols() != data.d_in() || model.w.rows() != data.d_out()) {
    throw ShapeError("square_loss_grad: model shape does not match dataset");
  }
  Matrix r = residual(model.w, data);
  Matrix g = kernels::matmul_transa(r, data.inputs());
  const double scale = 1.0 / (double(data.size()) * double(data.d_out()));
  return g * scale;
}

double majorization_gap(const LinearModel& model, const Matrix& delta,
                        const Dataset& data) {
  require_same_shapes(model.w, delta, "majorization_gap");
  const double base = square_loss(model, data);
  const double linear = dot(square_loss_grad(model, data), delta);
  const double spec = is_zero(delta) ? 0.0 : matrix_norm(delta, NormSpec::spectral());
  const double curvature =
      0.5 * (double(data.d_in()) / double(data.d_out())) * spec * spec;
  LinearModel moved{model.w + delta};
  return (base + linear + curvature) - square_loss(moved, data);
}

std::pair<double, LayerList> two_layer_forward_backward(const TwoLayerNet& net,
                                                        const Dataset& data) {
  if (net.w1.cols() != data.d_in() || net.w2.cols() != net.w1.rows() ||
      net.w2.rows() != data.d_out()) {
    throw ShapeError("two_layer_forward_backward: shape chain mismatch");
  }
  Matrix pre = kernels::matmul_transb(data.inputs(), net.w1);  // n x hidden
  Matrix act = pre;
  for (double& v : act.data()) v = v > 0.0 ? v : 0.0;
  Matrix p = kernels::matmul_transb(act, net.w2);  // n x d_out
  Matrix r = p - data.targets();

  double sq = 0.0;
  for (double v : r.data()) sq += v * v;
  const double scale = 1.0 / (double(data.size()) * double(data.d_out()));
  const double loss = 0.5 * scale * sq;

  Matrix dp = r * scale;                               // dL/dP
  Matrix g2 = kernels::matmul_transa(dp, act);         // d_out x hidden
  Matrix dact = kernels::matmul(dp, net.w2);           // n x hidden
  for (std::size_t i = 0; i < dact.size(); ++i) {
    if (!(pre.data()[i] > 0.0)) dact.data()[i] = 0.0;
  }
  Matrix g1 = kernels::matmul_transa(dact, data.inputs());  // hidden x d_in
  return {loss, LayerList{std::move(g1), std::move(g2)}};
}

}  // namespace normdescent
