#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "normdescent/norms.hpp"
#include "normdescent/rng.hpp"
#include "normdescent/steepest.hpp"
#include "oracles.hpp"

using namespace normdescent;

namespace {

Matrix col(std::initializer_list<double> vals) {
  Matrix m(vals.size(), 1);
  std::size_t i = 0;
  for (double v : vals) m(i++, 0) = v;
  return m;
}

// The quadratic model the solver minimizes, evaluated at an arbitrary update.
double model_value(const Matrix& g, const Matrix& update, const NormSpec& spec,
                   double lambda) {
  const double norm = spec.vector_only() ? vector_norm(update, spec)
                                         : matrix_norm(update, spec);
  return dot(g, update) + 0.5 * lambda * norm * norm;
}

}  // namespace

TEST_CASE("l2 steepest descent is the normalized gradient step") {
  Matrix g = col({3.0, 4.0});
  SteepestSolution sol = solve_single(g, NormSpec::vector_lp(2.0), 2.0);
  CHECK(sol.step_size == doctest::Approx(2.5).epsilon(1e-15));
  CHECK(sol.dual_values.size() == 1);
  CHECK(sol.dual_values[0] == doctest::Approx(5.0).epsilon(1e-15));
  CHECK(sol.updates[0](0, 0) == doctest::Approx(-1.5).epsilon(1e-15));
  CHECK(sol.updates[0](1, 0) == doctest::Approx(-2.0).epsilon(1e-15));
  CHECK(sol.objective_value == doctest::Approx(-25.0 / 4.0).epsilon(1e-15));
}

TEST_CASE("linf steepest descent is sign descent") {
  Matrix g = col({2.0, -1.0});
  SteepestSolution sol = solve_single(g, NormSpec::vector_lp(NormSpec::kInf), 1.0);
  CHECK(sol.step_size == doctest::Approx(3.0).epsilon(1e-15));  // l1 dual
  CHECK(sol.updates[0](0, 0) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(sol.updates[0](1, 0) == doctest::Approx(3.0).epsilon(1e-15));
}

TEST_CASE("zero gradient and bad sharpness") {
  SteepestSolution sol = solve_single(Matrix(3, 1), NormSpec::vector_lp(2.0), 1.0);
  CHECK(sol.step_size == 0.0);
  CHECK(sol.dual_values[0] == 0.0);
  CHECK(sol.objective_value == 0.0);
  CHECK(is_zero(sol.updates[0]));

  Matrix g = col({1.0});
  CHECK_THROWS_AS(solve_single(g, NormSpec::vector_lp(2.0), 0.0), ValidationError);
  CHECK_THROWS_AS(solve_single(g, NormSpec::vector_lp(2.0), -1.0), ValidationError);
  CHECK_THROWS_AS(solve_single(g, NormSpec::vector_lp(2.0), 1.0 / 0.0),
                  ValidationError);
}

TEST_CASE("reference table closed forms match the solver") {
  Rng rng(41);
  for (const NormTableRow& row : reference_table()) {
    for (int rep = 0; rep < 10; ++rep) {
      Matrix g = row.domain == "vector" ? oracles::gaussian_matrix(6, 1, rng)
                                        : oracles::gaussian_matrix(4, 5, rng);
      const double lambda = 0.5 + rng.uniform() * 2.0;
      SteepestSolution sol = solve_single(g, row.norm, lambda);
      Matrix want = row.expected_update(g, lambda);
      CHECK(max_abs_diff(sol.updates[0], want) <=
            1e-12 * std::max(1.0, max_abs(want)));
    }
  }
  CHECK(reference_table().size() == 4);
}

TEST_CASE("solver beats random feasible candidates") {
  Rng rng(42);
  const NormSpec specs[] = {
      NormSpec::vector_lp(1.0),        NormSpec::vector_lp(2.0),
      NormSpec::vector_lp(NormSpec::kInf), NormSpec::vector_rms(),
      NormSpec::frobenius(),           NormSpec::spectral(),
      NormSpec::max_abs_entry(),       NormSpec::induced_l1_to_lp(2.0),
      NormSpec::l1_to_rms(),
  };
  for (const NormSpec& spec : specs) {
    Matrix g = spec.vector_only() ? oracles::gaussian_matrix(5, 1, rng)
                                  : oracles::gaussian_matrix(3, 4, rng);
    const double lambda = 1.7;
    SteepestSolution sol = solve_single(g, spec, lambda);
    // Objective identity for the single-norm problem.
    const double dual = sol.dual_values[0];
    CHECK(oracles::rel_gap(sol.objective_value, -dual * dual / (2.0 * lambda)) <=
          1e-10);
    CHECK(oracles::rel_gap(model_value(g, sol.updates[0], spec, lambda),
                           sol.objective_value) <= 1e-9);
    for (int c = 0; c < 2000; ++c) {
      Matrix candidate =
          spec.vector_only()
              ? oracles::gaussian_matrix(5, 1, rng)
              : oracles::gaussian_matrix(3, 4, rng);
      candidate = candidate * (sol.step_size * (0.1 + 2.0 * rng.uniform()) /
                               std::max(1e-12, frobenius_norm(candidate)));
      CHECK(model_value(g, candidate, spec, lambda) >=
            sol.objective_value - 1e-10 * std::abs(sol.objective_value));
    }
  }
}

TEST_CASE("modular solve on the worked two-layer instance") {
  LayerList gs;
  gs.push_back(Matrix::from_rows({{1.0}}));
  gs.push_back(Matrix::from_rows({{4.0}}));
  ModularNormSpec spec({{1.0, NormSpec::spectral()}, {2.0, NormSpec::spectral()}});
  SteepestSolution sol = solve_modular(gs, spec, 1.0);

  // eta = (1/1)*1 + (1/2)*4 = 3; layer moves are -(eta/s_l) * direction.
  CHECK(sol.step_size == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(sol.dual_values[0] == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(sol.dual_values[1] == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(sol.updates[0](0, 0) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(sol.updates[1](0, 0) == doctest::Approx(-1.5).epsilon(1e-15));
  // -eta * sum_l dual_l/s_l + lambda eta^2 / 2 = -9 + 4.5.
  CHECK(sol.objective_value == doctest::Approx(-4.5).epsilon(1e-15));

  CHECK_THROWS_AS(solve_modular(gs, ModularNormSpec({{1.0, NormSpec::spectral()}}), 1.0),
                  ShapeError);
}

TEST_CASE("modular updates equalize the scaled layer norms") {
  Rng rng(43);
  for (int rep = 0; rep < 30; ++rep) {
    LayerList gs;
    gs.push_back(oracles::gaussian_matrix(3, 4, rng));
    gs.push_back(oracles::gaussian_matrix(2, 2, rng));
    gs.push_back(oracles::gaussian_matrix(4, 3, rng));
    std::vector<ModularEntry> entries = {
        {0.5 + rng.uniform() * 1.5, NormSpec::spectral()},
        {0.5 + rng.uniform() * 1.5, NormSpec::max_abs_entry()},
        {0.5 + rng.uniform() * 1.5, NormSpec::rms_to_rms()},
    };
    const double lambda = 0.5 + rng.uniform() * 2.0;
    SteepestSolution sol = solve_modular(gs, ModularNormSpec(entries), lambda);

    double lo = 1.0 / 0.0;
    double hi = 0.0;
    for (std::size_t l = 0; l < 3; ++l) {
      const double scaled =
          entries[l].scale * matrix_norm(sol.updates[l], entries[l].norm);
      lo = std::min(lo, scaled);
      hi = std::max(hi, scaled);
    }
    CHECK((hi - lo) <= 1e-9 * hi);
    CHECK(oracles::rel_gap(hi, sol.step_size) <= 1e-9);
    // The modular norm of the whole update equals the step size too.
    CHECK(oracles::rel_gap(modular_norm(sol.updates, ModularNormSpec(entries)),
                           sol.step_size) <= 1e-9);
  }
}

TEST_CASE("solutions scale linearly in the gradient") {
  Rng rng(44);
  Matrix g = oracles::gaussian_matrix(3, 3, rng);
  SteepestSolution base = solve_single(g, NormSpec::spectral(), 1.3);
  for (double c : {0.25, 3.0}) {
    SteepestSolution scaled = solve_single(g * c, NormSpec::spectral(), 1.3);
    CHECK(oracles::rel_gap(scaled.step_size, c * base.step_size) <= 1e-12);
    CHECK(max_abs_diff(scaled.updates[0], base.updates[0] * c) <=
          1e-12 * max_abs(base.updates[0]));
  }
}

TEST_CASE("doubling the sharpness halves the step exactly") {
  Rng rng(45);
  LayerList gs;
  gs.push_back(oracles::gaussian_matrix(2, 3, rng));
  gs.push_back(oracles::gaussian_matrix(3, 1, rng));
  ModularNormSpec spec({{1.0, NormSpec::max_abs_entry()}, {1.0, NormSpec::frobenius()}});
  SteepestSolution a = solve_modular(gs, spec, 0.7);
  SteepestSolution b = solve_modular(gs, spec, 1.4);
  CHECK(b.step_size == a.step_size / 2.0);  // bitwise: only the divisor changed
  for (std::size_t l = 0; l < gs.size(); ++l) {
    auto ad = a.updates[l].data();
    auto bd = b.updates[l].data();
    for (std::size_t i = 0; i < ad.size(); ++i) {
      CHECK(oracles::ulp_distance(bd[i], ad[i] / 2.0) == 0);
    }
  }
}

TEST_CASE("max-of-max solve is global sign descent") {
  LayerList single;
  single.push_back(Matrix::from_rows({{2.0, -1.0}}));
  SteepestSolution sol = solve_max_of_max(single, 1.0);
  CHECK(sol.step_size == doctest::Approx(3.0).epsilon(1e-15));
  CHECK(sol.updates[0](0, 0) == doctest::Approx(-3.0).epsilon(1e-15));
  CHECK(sol.updates[0](0, 1) == doctest::Approx(3.0).epsilon(1e-15));

  // Multi-layer solve agrees with flattening to one vector under linf.
  Rng rng(46);
  for (int rep = 0; rep < 20; ++rep) {
    LayerList gs;
    const int count = 1 + int(rng.next_u64() % 3);
    for (int l = 0; l < count; ++l) {
      gs.push_back(oracles::gaussian_matrix(1 + rng.next_u64() % 3,
                                            1 + rng.next_u64() % 3, rng));
    }
    SteepestSolution multi = solve_max_of_max(gs, 1.9);
    SteepestSolution flat =
        solve_single(flatten(gs), NormSpec::vector_lp(NormSpec::kInf), 1.9);
    CHECK(oracles::rel_gap(multi.step_size, flat.step_size) <= 1e-12);
    CHECK(max_abs_diff(flatten(multi.updates), flat.updates[0]) <=
          1e-12 * std::max(1.0, max_abs(flat.updates[0])));
  }
}

TEST_CASE("spectral layer solve shares one step across layers") {
  Rng rng(47);
  LayerList gs;
  gs.push_back(oracles::gaussian_matrix(3, 4, rng));
  gs.push_back(oracles::gaussian_matrix(2, 2, rng));
  SteepestSolution sol = solve_spectral_layers(gs, 2.0);

  double dual_sum = 0.0;
  for (std::size_t l = 0; l < gs.size(); ++l) {
    dual_sum += dual_norm(gs[l], NormSpec::spectral());
    Matrix dir = lmo_direction(gs[l], NormSpec::spectral());
    CHECK(max_abs_diff(sol.updates[l], dir * -sol.step_size) <= 1e-10);
  }
  CHECK(oracles::rel_gap(sol.step_size, dual_sum / 2.0) <= 1e-12);
}
