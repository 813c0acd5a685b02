#include "normdescent/optimizers.hpp"

#include <cmath>
#include <cstddef>

#include "normdescent/errors.hpp"
#include "normdescent/kernels.hpp"

namespace normdescent {
namespace {

double sign_of(double x) { return x > 0.0 ? 1.0 : (x < 0.0 ? -1.0 : 0.0); }

void require_layer_shapes(const LayerList& w, const LayerList& g,
                          const char* context) {
  if (w.size() != g.size()) {
    throw ShapeError(std::string(context) + ": layer count mismatch");
  }
  for (std::size_t l = 0; l < w.size(); ++l) {
    require_same_shapes(w[l], g[l], context);
  }
}

LayerList zeros_like(const LayerList& w) {
  LayerList out;
  out.reserve(w.size());
  for (const Matrix& m : w) out.emplace_back(m.rows(), m.cols());
  return out;
}

}  // namespace

void adam_step(LayerList& w, const LayerList& g, AdamState& state) {
  require_layer_shapes(w, g, "adam_step");
  if (state.m.empty()) {
    state.m = zeros_like(w);
    state.v = zeros_like(w);
  }
  require_layer_shapes(w, state.m, "adam_step state");
  state.step_count += 1;

  const double b1 = state.beta1;
  const double b2 = state.beta2;
  // Correction factors collapse to 1 when the flag is off; for beta = 0 they
  // are 1 anyway, so the EMA-free reduction is unaffected either way.
  const double c1 =
      state.bias_correction ? 1.0 - std::pow(b1, double(state.step_count)) : 1.0;
  const double c2 =
      state.bias_correction ? 1.0 - std::pow(b2, double(state.step_count)) : 1.0;

  for (std::size_t l = 0; l < w.size(); ++l) {
    auto wd = w[l].data();
    auto gd = g[l].data();
    auto md = state.m[l].data();
    auto vd = state.v[l].data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      md[i] = b1 * md[i] + (1.0 - b1) * gd[i];
      vd[i] = b2 * vd[i] + (1.0 - b2) * gd[i] * gd[i];
      const double denom = std::sqrt(vd[i] / c2) + state.epsilon;
      if (denom == 0.0) continue;
      wd[i] -= state.lr * (md[i] / c1) / denom;
    }
  }
}

void sign_descent_step(LayerList& w, const LayerList& g, double lr) {
  require_layer_shapes(w, g, "sign_descent_step");
  for (std::size_t l = 0; l < w.size(); ++l) {
    auto wd = w[l].data();
    auto gd = g[l].data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      wd[i] -= lr * sign_of(gd[i]);
    }
  }
}

void shampoo_step(LayerList& w, const LayerList& g, ShampooState& state) {
  require_layer_shapes(w, g, "shampoo_step");
  if (state.l_acc.empty()) {
    state.l_acc.reserve(w.size());
    state.r_acc.reserve(w.size());
    for (const Matrix& m : w) {
      state.l_acc.emplace_back(m.rows(), m.rows());
      state.r_acc.emplace_back(m.cols(), m.cols());
    }
  }
  if (state.l_acc.size() != w.size()) {
    throw ShapeError("shampoo_step: state layer count mismatch");
  }
  state.step_count += 1;

  for (std::size_t l = 0; l < w.size(); ++l) {
    Matrix gg = kernels::gram_left(g[l]);
    Matrix gtg = kernels::gram_right(g[l]);
    if (state.mode == ShampooMode::sum) {
      state.l_acc[l] = state.l_acc[l] + gg;
      state.r_acc[l] = state.r_acc[l] + gtg;
    } else {
      state.l_acc[l] = state.l_acc[l] * state.beta + gg * (1.0 - state.beta);
      state.r_acc[l] = state.r_acc[l] * state.beta + gtg * (1.0 - state.beta);
    }
    Matrix left = spd_inverse_root(state.l_acc[l], 4, state.epsilon);
    Matrix right = spd_inverse_root(state.r_acc[l], 4, state.epsilon);
    Matrix update = kernels::matmul(kernels::matmul(left, g[l]), right);
    w[l] = w[l] - update * state.lr;
  }
}

void spectral_descent_step(LayerList& w, const LayerList& g, double lr,
                           const SpectralDescentBackend& backend) {
  require_layer_shapes(w, g, "spectral_descent_step");
  for (std::size_t l = 0; l < w.size(); ++l) {
    if (is_zero(g[l])) continue;
    Matrix dir = backend.kind == SpectralDescentBackend::Kind::svd
                     ? orthogonalize_via_svd(g[l])
                     : orthogonalize_newton_schulz(g[l], backend.polynomial);
    w[l] = w[l] - dir * lr;
  }
}

void prodigy_step(LayerList& w, const LayerList& g, ProdigyState& state) {
  require_layer_shapes(w, g, "prodigy_step");
  if (state.w0.empty()) {
    state.w0 = w;
    state.m = zeros_like(w);
    state.v = zeros_like(w);
    state.s = zeros_like(w);
  }
  require_layer_shapes(w, state.w0, "prodigy_step state");
  state.step_count += 1;

  const double eta = state.eta;
  const double eta2 = eta * eta;
  const double b1 = state.beta1;
  const double b2 = state.beta2;
  const double rb2 = std::sqrt(b2);

  for (std::size_t l = 0; l < w.size(); ++l) {
    auto wd = w[l].data();
    auto gd = g[l].data();
    auto md = state.m[l].data();
    auto vd = state.v[l].data();
    for (std::size_t i = 0; i < wd.size(); ++i) {
      md[i] = b1 * md[i] + (1.0 - b1) * eta * gd[i];
      vd[i] = b2 * vd[i] + (1.0 - b2) * eta2 * gd[i] * gd[i];
      const double denom = std::sqrt(vd[i]) + state.epsilon;
      if (denom == 0.0) continue;
      wd[i] -= eta * md[i] / denom;
    }
  }

  // The warmup signal is the progress made from w0 including this move.
  double progress = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    auto gd = g[l].data();
    auto wd = w[l].data();
    auto w0d = state.w0[l].data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      progress += gd[i] * (w0d[i] - wd[i]);
    }
  }
  state.r = rb2 * state.r + (1.0 - rb2) * eta2 * progress;

  double s_l1 = 0.0;
  for (std::size_t l = 0; l < w.size(); ++l) {
    auto sd = state.s[l].data();
    auto gd = g[l].data();
    for (std::size_t i = 0; i < sd.size(); ++i) {
      sd[i] = rb2 * sd[i] + (1.0 - rb2) * eta2 * gd[i];
      s_l1 += std::fabs(sd[i]);
    }
  }
  if (s_l1 != 0.0) {
    state.eta = std::max(state.eta, state.r / s_l1);
  }
}

double line_search_update(LineSearchState& state, const LayerList& w,
                          const LayerList& g) {
  require_layer_shapes(w, g, "line_search_update");
  if (state.w0.empty()) state.w0 = w;
  require_layer_shapes(w, state.w0, "line_search_update state");

  double dot = 0.0;      // <g, w0 - w>
  double g_l1 = 0.0;
  double g_sq = 0.0;
  double disp_sq = 0.0;  // ||w0 - w||_2^2
  for (std::size_t l = 0; l < w.size(); ++l) {
    auto gd = g[l].data();
    auto wd = w[l].data();
    auto w0d = state.w0[l].data();
    for (std::size_t i = 0; i < gd.size(); ++i) {
      const double d = w0d[i] - wd[i];
      dot += gd[i] * d;
      g_l1 += std::fabs(gd[i]);
      g_sq += gd[i] * gd[i];
      disp_sq += d * d;
    }
  }
  state.prev_w = w;

  if (g_sq == 0.0 || disp_sq == 0.0) return state.eta;

  switch (state.policy) {
    case LineSearchPolicy::prodigy_max:
      state.eta = std::max(state.eta, dot / g_l1);
      break;
    case LineSearchPolicy::doubling:
      if (state.frozen) break;
      if (dot > 0.0) {
        state.eta *= 2.0;
      } else {
        state.frozen = true;
      }
      break;
    case LineSearchPolicy::cosine_rule: {
      const double cos_theta = dot / (std::sqrt(g_sq) * std::sqrt(disp_sq));
      state.eta *= std::max(1.0 + cos_theta, 1e-3);
      break;
    }
  }
  return state.eta;
}

}  // namespace normdescent
