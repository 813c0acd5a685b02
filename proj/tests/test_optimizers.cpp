#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normdescent/norms.hpp"
#include "normdescent/optimizers.hpp"
#include "normdescent/rng.hpp"
#include "normdescent/serialize.hpp"
#include "oracles.hpp"

using namespace normdescent;
using nlohmann::json;

namespace {

LayerList single(std::initializer_list<std::initializer_list<double>> rows) {
  LayerList w;
  w.push_back(Matrix::from_rows(rows));
  return w;
}

}  // namespace

TEST_CASE("adam follows the scalar recurrence") {
  LayerList w = single({{1.0}});
  AdamState state;
  state.lr = 0.1;
  state.bias_correction = true;

  // Shadow the update with plain scalar arithmetic in the same op order.
  double m = 0.0, v = 0.0, shadow = 1.0;
  const double grads[] = {0.5, -0.25};
  for (int t = 0; t < 2; ++t) {
    LayerList g = single({{grads[t]}});
    adam_step(w, g, state);

    m = state.beta1 * m + (1.0 - state.beta1) * grads[t];
    v = state.beta2 * v + (1.0 - state.beta2) * grads[t] * grads[t];
    const double c1 = 1.0 - std::pow(state.beta1, t + 1);
    const double c2 = 1.0 - std::pow(state.beta2, t + 1);
    shadow -= state.lr * (m / c1) / (std::sqrt(v / c2) + state.epsilon);
    CHECK(w[0](0, 0) == doctest::Approx(shadow).epsilon(1e-15));
  }
  CHECK(state.step_count == 2);
  CHECK(state.m[0](0, 0) == doctest::Approx(m).epsilon(1e-15));
  CHECK(state.v[0](0, 0) == doctest::Approx(v).epsilon(1e-15));
}

TEST_CASE("adam without bias correction uses the raw moments") {
  LayerList w = single({{0.0}});
  AdamState state;  // bias_correction defaults to false
  state.lr = 1.0;
  state.epsilon = 0.0;
  adam_step(w, single({{3.0}}), state);
  // First step: m = 0.1*3, v = 0.001*9; w -= m / sqrt(v).
  const double want = -(0.1 * 3.0) / std::sqrt(0.001 * 9.0);
  CHECK(w[0](0, 0) == doctest::Approx(want).epsilon(1e-14));
}

TEST_CASE("ema-free adam is sign descent to the ulp") {
  Rng rng(51);
  for (int rep = 0; rep < 20; ++rep) {
    LayerList g;
    g.push_back(oracles::gaussian_matrix(3, 4, rng));
    g.push_back(oracles::gaussian_matrix(2, 2, rng));
    LayerList w_adam;
    w_adam.push_back(oracles::gaussian_matrix(3, 4, rng));
    w_adam.push_back(oracles::gaussian_matrix(2, 2, rng));
    LayerList w_sign = w_adam;

    AdamState state;
    state.lr = 0.25;
    state.beta1 = 0.0;
    state.beta2 = 0.0;
    state.epsilon = 0.0;
    adam_step(w_adam, g, state);
    sign_descent_step(w_sign, g, 0.25);

    for (std::size_t l = 0; l < g.size(); ++l) {
      auto a = w_adam[l].data();
      auto s = w_sign[l].data();
      for (std::size_t i = 0; i < a.size(); ++i) {
        CHECK(oracles::ulp_distance(a[i], s[i]) <= 1);
      }
    }
  }
}

TEST_CASE("adam leaves coordinates with zero denominator untouched") {
  LayerList w = single({{5.0, -2.0}});
  AdamState state;
  state.beta2 = 0.0;
  state.epsilon = 0.0;
  adam_step(w, single({{0.0, 1.0}}), state);
  CHECK(w[0](0, 0) == 5.0);  // v = 0 and eps = 0: untouched, not NaN
  CHECK(w[0](0, 1) != -2.0);
}

TEST_CASE("adam validates layer shapes") {
  LayerList w = single({{1.0}});
  AdamState state;
  LayerList wrong;
  wrong.push_back(Matrix(1, 2));
  CHECK_THROWS_AS(adam_step(w, wrong, state), ShapeError);
  // State buffers bind to the first shapes they see.
  adam_step(w, single({{1.0}}), state);
  LayerList two_layers = single({{1.0}});
  two_layers.push_back(Matrix(2, 2));
  CHECK_THROWS_AS(adam_step(two_layers, two_layers, state), ShapeError);
}

TEST_CASE("sign descent moves by lr with sign(0) = 0") {
  LayerList w = single({{1.0, 1.0, 1.0}});
  sign_descent_step(w, single({{2.0, -1.0, 0.0}}), 0.1);
  CHECK(w[0](0, 0) == doctest::Approx(0.9).epsilon(1e-15));
  CHECK(w[0](0, 1) == doctest::Approx(1.1).epsilon(1e-15));
  CHECK(w[0](0, 2) == 1.0);
}

TEST_CASE("fresh shampoo with zero epsilon orthogonalizes the gradient") {
  LayerList w = single({{0.0, 0.0}, {0.0, 0.0}});
  LayerList g = single({{0.0, 2.0}, {1.0, 0.0}});
  ShampooState state;
  state.lr = 0.7;
  state.epsilon = 0.0;
  shampoo_step(w, g, state);
  // (G G^T)^(-1/4) G (G^T G)^(-1/4) = U V^T = [[0,1],[1,0]] here.
  CHECK(w[0](0, 0) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(w[0](0, 1) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(w[0](1, 0) == doctest::Approx(-0.7).epsilon(1e-12));
  CHECK(w[0](1, 1) == doctest::Approx(0.0).epsilon(1e-12));

  CHECK(state.l_acc[0](0, 0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(state.r_acc[0](1, 1) == doctest::Approx(4.0).epsilon(1e-15));
}

TEST_CASE("fresh shampoo matches spectral descent on random rectangles") {
  Rng rng(52);
  for (int rep = 0; rep < 10; ++rep) {
    LayerList g;
    g.push_back(oracles::gaussian_matrix(3, 5, rng));
    LayerList w_shampoo;
    w_shampoo.push_back(Matrix(3, 5));
    LayerList w_spectral = w_shampoo;

    ShampooState state;
    state.lr = 0.4;
    state.epsilon = 0.0;
    shampoo_step(w_shampoo, g, state);
    spectral_descent_step(w_spectral, g, 0.4, SpectralDescentBackend::svd());

    CHECK(max_abs_diff(w_shampoo[0], w_spectral[0]) <=
          1e-8 * std::max(1.0, max_abs(w_spectral[0])));
  }
}

TEST_CASE("shampoo accumulates sums or emas") {
  LayerList g = single({{1.0, 0.0}, {0.0, 2.0}});

  LayerList w = single({{0.0, 0.0}, {0.0, 0.0}});
  ShampooState sum_state;
  shampoo_step(w, g, sum_state);
  shampoo_step(w, g, sum_state);
  CHECK(sum_state.l_acc[0](0, 0) == doctest::Approx(2.0).epsilon(1e-15));
  CHECK(sum_state.l_acc[0](1, 1) == doctest::Approx(8.0).epsilon(1e-15));
  CHECK(sum_state.step_count == 2);

  ShampooState ema_state;
  ema_state.mode = ShampooMode::ema;
  ema_state.beta = 0.9;
  LayerList w2 = single({{0.0, 0.0}, {0.0, 0.0}});
  shampoo_step(w2, g, ema_state);
  CHECK(ema_state.l_acc[0](0, 0) == doctest::Approx(0.1 * 1.0).epsilon(1e-15));
  shampoo_step(w2, g, ema_state);
  CHECK(ema_state.l_acc[0](0, 0) ==
        doctest::Approx(0.9 * 0.1 + 0.1 * 1.0).epsilon(1e-15));
}

TEST_CASE("shampoo handles rank-deficient gradients via the range root") {
  LayerList w = single({{0.0, 0.0}, {0.0, 0.0}});
  LayerList g = single({{1.0, 0.0}, {0.0, 0.0}});
  ShampooState state;
  state.lr = 1.0;
  state.epsilon = 0.0;
  shampoo_step(w, g, state);  // gram matrices are singular; must not throw
  CHECK(w[0](0, 0) == doctest::Approx(-1.0).epsilon(1e-10));
  CHECK(std::abs(w[0](1, 1)) <= 1e-12);
}

TEST_CASE("spectral descent backends agree and skip zero layers") {
  Rng rng(53);
  LayerList g;
  g.push_back(oracles::conditioned_matrix(4, 3, 20.0, rng));
  g.push_back(Matrix(2, 2));  // zero layer: stays put
  LayerList w_svd;
  w_svd.push_back(Matrix(4, 3));
  w_svd.push_back(Matrix(2, 2));
  LayerList w_ns = w_svd;

  spectral_descent_step(w_svd, g, 0.3, SpectralDescentBackend::svd());
  spectral_descent_step(w_ns, g, 0.3, SpectralDescentBackend::newton_schulz());

  CHECK(max_abs_diff(w_svd[0], w_ns[0]) <= 1e-5);
  CHECK(is_zero(w_svd[1]));
  CHECK(is_zero(w_ns[1]));
}

TEST_CASE("prodigy warmup step sizes double in the 1-d construction") {
  // Constant gradient 1, EMA-free, epsilon 0: each step size equals the
  // total displacement so far, so eta goes 1, 1, 2, 4, ... times eta0.
  LayerList w = single({{0.5}});
  ProdigyState state;
  state.beta1 = 0.0;
  state.beta2 = 0.0;
  state.epsilon = 0.0;
  state.eta = 1e-6;

  std::vector<double> etas_used;
  for (int t = 0; t < 6; ++t) {
    etas_used.push_back(state.eta);
    prodigy_step(w, single({{1.0}}), state);
  }
  CHECK(etas_used[0] == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(etas_used[1] == doctest::Approx(1e-6).epsilon(1e-12));
  CHECK(etas_used[2] == doctest::Approx(2e-6).epsilon(1e-12));
  CHECK(etas_used[3] == doctest::Approx(4e-6).epsilon(1e-12));
  CHECK(etas_used[4] == doctest::Approx(8e-6).epsilon(1e-12));
  CHECK(etas_used[5] == doctest::Approx(16e-6).epsilon(1e-12));
}

TEST_CASE("prodigy doubling is bitwise at a power-of-two eta0") {
  LayerList w = single({{0.0}});
  ProdigyState state;
  state.beta1 = 0.0;
  state.beta2 = 0.0;
  state.epsilon = 0.0;
  state.eta = 0x1p-20;

  std::vector<double> etas;
  for (int t = 0; t < 20; ++t) {
    etas.push_back(state.eta);
    prodigy_step(w, single({{1.0}}), state);
  }
  CHECK(etas[1] == etas[0]);
  for (std::size_t t = 2; t + 1 < etas.size(); ++t) {
    CHECK(etas[t + 1] == 2.0 * etas[t]);
  }
}

TEST_CASE("prodigy eta never decreases and ignores zero gradients") {
  Rng rng(54);
  LayerList w;
  w.push_back(oracles::gaussian_matrix(2, 3, rng));
  ProdigyState state;
  double prev = state.eta;
  for (int t = 0; t < 200; ++t) {
    LayerList g;
    g.push_back(oracles::gaussian_matrix(2, 3, rng));
    prodigy_step(w, g, state);
    CHECK(state.eta >= prev);
    prev = state.eta;
  }

  const double before = state.eta;
  LayerList zero;
  zero.push_back(Matrix(2, 3));
  prodigy_step(w, zero, state);  // ||s||_1 unchanged at beta2=0.999 scale
  CHECK(state.eta >= before);
}

TEST_CASE("prodigy captures w0 at the first step") {
  LayerList w = single({{2.0, -1.0}});
  ProdigyState state;
  prodigy_step(w, single({{1.0, 1.0}}), state);
  CHECK(state.w0[0](0, 0) == 2.0);
  CHECK(state.w0[0](0, 1) == -1.0);
  const Matrix w0_before = state.w0[0];
  prodigy_step(w, single({{1.0, 1.0}}), state);
  CHECK(state.w0[0] == w0_before);
  CHECK(state.step_count == 2);
}

TEST_CASE("line search policies re-estimate eta from the displacement") {
  LayerList w0 = single({{1.0}});

  SUBCASE("prodigy_max takes the ratio against the l1 norm") {
    LineSearchState state;
    state.policy = LineSearchPolicy::prodigy_max;
    CHECK(line_search_update(state, w0, single({{2.0}})) == 1e-6);  // captures w0
    LayerList moved = single({{0.9}});
    // <g, w0 - w> / ||g||_1 = (2 * 0.1) / 2 = 0.1.
    CHECK(line_search_update(state, moved, single({{2.0}})) ==
          doctest::Approx(0.1).epsilon(1e-15));
    CHECK(state.eta == doctest::Approx(0.1).epsilon(1e-15));
    // A smaller ratio cannot pull eta back down.
    LayerList barely = single({{0.99}});
    CHECK(line_search_update(state, barely, single({{2.0}})) ==
          doctest::Approx(0.1).epsilon(1e-15));
  }

  SUBCASE("doubling doubles until the descent test fails, then freezes") {
    LineSearchState state;
    state.policy = LineSearchPolicy::doubling;
    state.eta = 1.0;
    line_search_update(state, w0, single({{1.0}}));  // capture
    LayerList moved = single({{0.5}});
    CHECK(line_search_update(state, moved, single({{1.0}})) == 2.0);
    CHECK(line_search_update(state, moved, single({{1.0}})) == 4.0);
    CHECK(!state.frozen);
    // Gradient now points the other way: <g, w0 - w> < 0 fails the test.
    CHECK(line_search_update(state, moved, single({{-1.0}})) == 4.0);
    CHECK(state.frozen);
    CHECK(line_search_update(state, moved, single({{1.0}})) == 4.0);
  }

  SUBCASE("cosine rule scales by 1 + cos(theta) with a floor") {
    LineSearchState state;
    state.policy = LineSearchPolicy::cosine_rule;
    state.eta = 1.0;
    line_search_update(state, w0, single({{1.0}}));
    LayerList moved = single({{0.5}});  // w0 - w = +0.5
    CHECK(line_search_update(state, moved, single({{3.0}})) ==
          doctest::Approx(2.0).epsilon(1e-15));  // cos = +1
    CHECK(line_search_update(state, moved, single({{-3.0}})) ==
          doctest::Approx(2.0 * 1e-3).epsilon(1e-12));  // cos = -1: floor
  }

  SUBCASE("zero gradient or zero displacement leaves eta alone") {
    LineSearchState state;
    state.policy = LineSearchPolicy::doubling;
    state.eta = 3.0;
    line_search_update(state, w0, single({{1.0}}));
    CHECK(line_search_update(state, w0, single({{0.0}})) == 3.0);
    CHECK(line_search_update(state, w0, single({{1.0}})) == 3.0);  // no move yet
    CHECK(!state.frozen);
  }
}

TEST_CASE("optimizer states round-trip through json") {
  Rng rng(55);

  AdamState adam;
  adam.lr = 0.01;
  adam.bias_correction = true;
  LayerList w;
  w.push_back(oracles::gaussian_matrix(2, 3, rng));
  LayerList g;
  g.push_back(oracles::gaussian_matrix(2, 3, rng));
  adam_step(w, g, adam);

  json j = adam;
  AdamState adam2 = j.get<AdamState>();
  CHECK(adam2.lr == adam.lr);
  CHECK(adam2.bias_correction == adam.bias_correction);
  CHECK(adam2.step_count == adam.step_count);
  CHECK(adam2.m[0] == adam.m[0]);
  CHECK(adam2.v[0] == adam.v[0]);

  ShampooState shampoo;
  shampoo.mode = ShampooMode::ema;
  shampoo_step(w, g, shampoo);
  json js = shampoo;
  CHECK(js.at("mode") == "ema");
  ShampooState shampoo2 = js.get<ShampooState>();
  CHECK(shampoo2.mode == ShampooMode::ema);
  CHECK(shampoo2.l_acc[0] == shampoo.l_acc[0]);
  CHECK(shampoo2.r_acc[0] == shampoo.r_acc[0]);

  ProdigyState prodigy;
  prodigy_step(w, g, prodigy);
  json jp = prodigy;
  ProdigyState prodigy2 = jp.get<ProdigyState>();
  CHECK(prodigy2.eta == prodigy.eta);
  CHECK(prodigy2.r == prodigy.r);
  CHECK(prodigy2.s[0] == prodigy.s[0]);
  CHECK(prodigy2.w0[0] == prodigy.w0[0]);

  LineSearchState line;
  line.policy = LineSearchPolicy::cosine_rule;
  line_search_update(line, w, g);
  json jl = line;
  CHECK(jl.at("policy") == "cosine_rule");
  LineSearchState line2 = jl.get<LineSearchState>();
  CHECK(line2.eta == line.eta);
  CHECK(line2.frozen == line.frozen);
  CHECK(line2.w0[0] == line.w0[0]);
  CHECK(line2.prev_w[0] == line.prev_w[0]);

  // Matrices survive a dump/parse cycle bitwise.
  Matrix m = oracles::gaussian_matrix(3, 3, rng);
  json jm = m;
  Matrix m2 = json::parse(jm.dump()).get<Matrix>();
  CHECK(m2 == m);

  CHECK_THROWS_AS(json::parse("[[1,2],[3]]").get<Matrix>(), ValidationError);
}
