#pragma once

#include <cstdint>
#include <vector>

#include "normdescent/linalg.hpp"
#include "normdescent/matrix.hpp"

namespace normdescent {

// All steppers mutate the weights and their state in place. States lazily
// allocate their buffers (and capture reference weights where needed) on the
// first step, so a default-constructed state is ready to use.

struct AdamState {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool bias_correction = false;
  LayerList m;
  LayerList v;
  std::int64_t step_count = 0;
};

// w -= lr * mhat / (sqrt(vhat) + epsilon). Hats apply bias correction only
// when the flag is set. A zero denominator (epsilon = 0, zero second moment)
// leaves the coordinate untouched.
void adam_step(LayerList& w, const LayerList& g, AdamState& state);

// w -= lr * sign(g), with sign(0) = 0.
void sign_descent_step(LayerList& w, const LayerList& g, double lr);

enum class ShampooMode { sum, ema };

struct ShampooState {
  double lr = 1e-3;
  double epsilon = 1e-12;
  ShampooMode mode = ShampooMode::sum;
  double beta = 0.999;  // EMA decay, read only in ema mode
  std::vector<Matrix> l_acc;  // per layer, rows x rows
  std::vector<Matrix> r_acc;  // per layer, cols x cols
  std::int64_t step_count = 0;
};

// Accumulates L += G G^T and R += G^T G (or their EMAs), then applies
// w -= lr * (L + eps I)^(-1/4) G (R + eps I)^(-1/4) per layer. Accumulators
// stay exactly symmetric because the Gram kernels mirror their lower
// triangle.
void shampoo_step(LayerList& w, const LayerList& g, ShampooState& state);

struct SpectralDescentBackend {
  enum class Kind { svd, newton_schulz };
  Kind kind = Kind::svd;
  PolynomialSpec polynomial = PolynomialSpec::default_cubic();

  static SpectralDescentBackend svd() { return {}; }
  static SpectralDescentBackend newton_schulz(
      PolynomialSpec spec = PolynomialSpec::default_cubic()) {
    return {Kind::newton_schulz, std::move(spec)};
  }
};

// w -= lr * orthogonalize(G) per layer; zero-gradient layers do not move.
void spectral_descent_step(LayerList& w, const LayerList& g, double lr,
                           const SpectralDescentBackend& backend);

struct ProdigyState {
  double eta = 1e-6;  // current step size; non-decreasing over the run
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  double r = 0.0;
  LayerList m;
  LayerList v;
  LayerList s;
  LayerList w0;  // weights at the first step; never touched afterwards
  std::int64_t step_count = 0;
};

// One step of the warmup recurrence: EMA the eta-scaled moments, move the
// weights by -eta * m / (sqrt(v) + epsilon), then feed the displacement from
// w0 into the r and s recurrences and raise eta to max(eta, r / ||s||_1).
// The displacement is measured after the move: in the EMA-free telescoping
// regime this makes each new step size equal the total progress so far,
// which is what produces the doubling warmup. ||s||_1 = 0 leaves eta alone.
void prodigy_step(LayerList& w, const LayerList& g, ProdigyState& state);

enum class LineSearchPolicy { prodigy_max, doubling, cosine_rule };

struct LineSearchState {
  double eta = 1e-6;
  LineSearchPolicy policy = LineSearchPolicy::prodigy_max;
  LayerList w0;      // captured on the first update
  LayerList prev_w;  // weights seen by the most recent update
  bool frozen = false;  // doubling only: set once the descent test fails
};

// Re-estimates the step size from the current gradient and the displacement
// from w0, per policy:
//   prodigy_max  eta <- max(eta, <g, w0 - w> / ||g||_1)
//   doubling     eta <- 2 * eta while <g, w0 - w> > 0, frozen at the first
//                failure of the test
//   cosine_rule  eta <- eta * max(1 + cos(theta), 1e-3) with theta between
//                g and (w0 - w); the floor stops collapse at cos = -1
// A zero gradient or zero displacement leaves eta unchanged (and does not
// freeze the doubling policy). Returns the new eta.
double line_search_update(LineSearchState& state, const LayerList& w,
                          const LayerList& g);

}  // namespace normdescent
