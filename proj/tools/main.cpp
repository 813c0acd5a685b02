// Command-line front end: property verification, desk-scale training runs,
// orthogonalization traces, and norm tables. Exit codes: 0 success, 1 failed
// verification checks, 2 usage/config errors, 3 numerical aborts.

#include <atomic>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "normdescent/errors.hpp"
#include "normdescent/io.hpp"
#include "normdescent/kernels.hpp"
#include "normdescent/linalg.hpp"
#include "normdescent/models.hpp"
#include "normdescent/norms.hpp"
#include "normdescent/optimizers.hpp"
#include "normdescent/rng.hpp"
#include "normdescent/serialize.hpp"
#include "normdescent/steepest.hpp"
#include "normdescent/verify.hpp"

namespace {

using nlohmann::json;
using namespace normdescent;

constexpr int kExitOk = 0;
constexpr int kExitChecksFailed = 1;
constexpr int kExitUsage = 2;
constexpr int kExitNumerical = 3;

int env_thread_cap() {
  const char* raw = std::getenv("NORMDESCENT_THREADS");
  if (raw == nullptr || *raw == '\0') return 0;
  char* end = nullptr;
  const long v = std::strtol(raw, &end, 10);
  if (end == raw || *end != '\0' || v < 1) {
    std::cerr << "warning: ignoring NORMDESCENT_THREADS='" << raw
              << "' (want a positive integer)\n";
    return 0;
  }
  return int(v);
}

// ------------------------------------------------------------------ verify

int cmd_verify(const std::string& suite, std::uint64_t seed, bool json_out,
               const std::string& output) {
  std::vector<CheckResult> results = run_verify_suite(suite, seed);

  json report;
  report["suite"] = suite;
  report["seed"] = seed;
  report["checks"] = json::array();
  std::size_t failed = 0;
  for (const CheckResult& r : results) {
    report["checks"].push_back({{"suite", r.suite},
                                {"name", r.name},
                                {"pass", r.pass},
                                {"measured_error", r.measured_error},
                                {"detail", r.detail}});
    if (!r.pass) ++failed;
  }
  report["passed"] = results.size() - failed;
  report["failed"] = failed;

  if (!output.empty()) io::write_text_atomic(output, report.dump(2) + "\n");
  if (json_out) {
    std::cout << report.dump(2) << "\n";
  } else {
    for (const CheckResult& r : results) {
      std::printf("[%s] %s/%s  measured %.3g%s%s\n", r.pass ? "PASS" : "FAIL",
                  r.suite.c_str(), r.name.c_str(), r.measured_error,
                  r.detail.empty() ? "" : "  ", r.detail.c_str());
    }
    std::printf("%zu/%zu checks passed\n", results.size() - failed, results.size());
  }
  return failed == 0 ? kExitOk : kExitChecksFailed;
}

// ------------------------------------------------------------------- train

enum class OptKind { adam, sign_descent, spectral_descent, shampoo, prodigy, steepest };

struct OptimizerRuntime {
  OptKind kind = OptKind::adam;
  std::string name;
  double lr = 1e-3;      // sign/spectral step size
  double lambda = 1.0;   // steepest sharpness
  AdamState adam;
  ShampooState shampoo;
  ProdigyState prodigy;
  SpectralDescentBackend backend;
  std::vector<ModularEntry> entries;  // steepest norm assignment, one per layer
};

struct ExperimentConfig {
  json raw;  // echoed into the record file and hashed for the checkpoint
  std::string task;
  std::size_t d_in = 0, d_out = 0, n = 0, hidden = 8;
  double noise = 0.0;
  std::uint64_t seed = 0;
  int steps = 0;
  std::filesystem::path output_path;
  OptimizerRuntime opt;
};

template <typename T>
T field_or(const json& j, const char* key, T fallback) {
  if (!j.contains(key)) return fallback;
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

template <typename T>
T require_field(const json& j, const char* key) {
  if (!j.contains(key)) {
    throw ValidationError(std::string("config is missing required field '") + key + "'");
  }
  try {
    return j.at(key).get<T>();
  } catch (const json::exception&) {
    throw ValidationError(std::string("config field '") + key + "' has the wrong type");
  }
}

OptimizerRuntime parse_optimizer(const json& j, std::size_t layer_count) {
  OptimizerRuntime opt;
  opt.name = require_field<std::string>(j, "name");
  if (opt.name == "adam") {
    opt.kind = OptKind::adam;
    opt.adam.lr = field_or(j, "lr", opt.adam.lr);
    opt.adam.beta1 = field_or(j, "beta1", opt.adam.beta1);
    opt.adam.beta2 = field_or(j, "beta2", opt.adam.beta2);
    opt.adam.epsilon = field_or(j, "epsilon", opt.adam.epsilon);
    opt.adam.bias_correction = field_or(j, "bias_correction", opt.adam.bias_correction);
  } else if (opt.name == "sign_descent") {
    opt.kind = OptKind::sign_descent;
    opt.lr = field_or(j, "lr", opt.lr);
  } else if (opt.name == "spectral_descent") {
    opt.kind = OptKind::spectral_descent;
    opt.lr = field_or(j, "lr", opt.lr);
    const std::string backend = field_or<std::string>(j, "backend", "svd");
    if (backend == "svd") {
      opt.backend = SpectralDescentBackend::svd();
    } else if (backend == "newton_schulz") {
      opt.backend = SpectralDescentBackend::newton_schulz();
    } else {
      throw ValidationError("optimizer backend must be 'svd' or 'newton_schulz', got '" +
                            backend + "'");
    }
  } else if (opt.name == "shampoo") {
    opt.kind = OptKind::shampoo;
    opt.shampoo.lr = field_or(j, "lr", opt.shampoo.lr);
    opt.shampoo.epsilon = field_or(j, "epsilon", opt.shampoo.epsilon);
    opt.shampoo.beta = field_or(j, "beta", opt.shampoo.beta);
    const std::string mode = field_or<std::string>(j, "mode", "sum");
    if (mode == "sum") {
      opt.shampoo.mode = ShampooMode::sum;
    } else if (mode == "ema") {
      opt.shampoo.mode = ShampooMode::ema;
    } else {
      throw ValidationError("shampoo mode must be 'sum' or 'ema', got '" + mode + "'");
    }
  } else if (opt.name == "prodigy") {
    opt.kind = OptKind::prodigy;
    opt.prodigy.eta = field_or(j, "eta0", opt.prodigy.eta);
    opt.prodigy.beta1 = field_or(j, "beta1", opt.prodigy.beta1);
    opt.prodigy.beta2 = field_or(j, "beta2", opt.prodigy.beta2);
    opt.prodigy.epsilon = field_or(j, "epsilon", opt.prodigy.epsilon);
    if (!(opt.prodigy.eta > 0.0)) {
      throw ValidationError("prodigy eta0 must be positive");
    }
  } else if (opt.name == "steepest") {
    opt.kind = OptKind::steepest;
    opt.lambda = require_field<double>(j, "lambda");
    if (!(opt.lambda > 0.0)) throw ValidationError("steepest lambda must be positive");
    std::vector<std::string> names;
    if (!j.contains("norms")) {
      throw ValidationError("steepest optimizer needs a 'norms' assignment");
    } else if (j.at("norms").is_string()) {
      names.assign(layer_count, j.at("norms").get<std::string>());
    } else {
      names = require_field<std::vector<std::string>>(j, "norms");
    }
    if (names.size() != layer_count) {
      throw ValidationError("steepest 'norms' must name " + std::to_string(layer_count) +
                            " norm(s) for this task");
    }
    std::vector<double> scales =
        field_or(j, "scales", std::vector<double>(layer_count, 1.0));
    if (scales.size() != layer_count) {
      throw ValidationError("steepest 'scales' must list " +
                            std::to_string(layer_count) + " value(s)");
    }
    for (std::size_t l = 0; l < layer_count; ++l) {
      std::optional<NormSpec> spec = norm_spec_from_name(names[l]);
      if (!spec) {
        std::string valid;
        for (const std::string& s : norm_spec_names()) {
          valid += valid.empty() ? s : ", " + s;
        }
        throw ValidationError("unknown norm '" + names[l] + "'; valid norms: " + valid);
      }
      opt.entries.push_back({scales[l], *spec});
    }
  } else {
    throw ValidationError(
        "unknown optimizer '" + opt.name +
        "'; valid names: adam, sign_descent, spectral_descent, shampoo, prodigy, "
        "steepest");
  }
  return opt;
}

ExperimentConfig parse_experiment(const json& j,
                                  std::optional<std::uint64_t> seed_override,
                                  const std::string& output_override) {
  ExperimentConfig cfg;
  cfg.raw = j;
  cfg.task = require_field<std::string>(j, "task");
  if (cfg.task != "linear" && cfg.task != "two_layer") {
    throw ValidationError("task must be 'linear' or 'two_layer', got '" + cfg.task + "'");
  }
  const json& ds = j.contains("dataset") ? j.at("dataset") : json::object();
  cfg.d_in = field_or<std::size_t>(ds, "d_in", 4);
  cfg.d_out = field_or<std::size_t>(ds, "d_out", 2);
  cfg.n = field_or<std::size_t>(ds, "n", 32);
  cfg.noise = field_or(ds, "noise", 0.0);
  cfg.seed = field_or<std::uint64_t>(ds, "seed", 0);
  if (seed_override) cfg.seed = *seed_override;
  cfg.hidden = field_or<std::size_t>(j, "hidden", 8);
  cfg.steps = require_field<int>(j, "steps");
  if (cfg.steps < 1) throw ValidationError("steps must be at least 1");
  std::string out = field_or<std::string>(j, "output_path", "");
  if (!output_override.empty()) out = output_override;
  if (out.empty()) throw ValidationError("config is missing 'output_path'");
  cfg.output_path = out;
  const std::size_t layers = cfg.task == "linear" ? 1 : 2;
  cfg.opt = parse_optimizer(require_field<json>(j, "optimizer"), layers);
  if (seed_override) cfg.raw["dataset"]["seed"] = *seed_override;
  if (!output_override.empty()) cfg.raw["output_path"] = output_override;
  return cfg;
}

// One training step; fills the per-layer dual norms of the gradient under
// the optimizer's implicit geometry and returns the step size it used.
double apply_step(OptimizerRuntime& opt, LayerList& w, const LayerList& g,
                  std::vector<double>& duals) {
  duals.clear();
  switch (opt.kind) {
    case OptKind::adam:
    case OptKind::sign_descent:
    case OptKind::prodigy:
      for (const Matrix& layer : g) {
        duals.push_back(dual_norm(layer, NormSpec::max_abs_entry()));
      }
      break;
    case OptKind::spectral_descent:
    case OptKind::shampoo:
      for (const Matrix& layer : g) {
        duals.push_back(dual_norm(layer, NormSpec::spectral()));
      }
      break;
    case OptKind::steepest:
      break;  // the solver reports them
  }
  switch (opt.kind) {
    case OptKind::adam:
      adam_step(w, g, opt.adam);
      return opt.adam.lr;
    case OptKind::sign_descent:
      sign_descent_step(w, g, opt.lr);
      return opt.lr;
    case OptKind::spectral_descent:
      spectral_descent_step(w, g, opt.lr, opt.backend);
      return opt.lr;
    case OptKind::shampoo:
      shampoo_step(w, g, opt.shampoo);
      return opt.shampoo.lr;
    case OptKind::prodigy: {
      const double eta_used = opt.prodigy.eta;
      prodigy_step(w, g, opt.prodigy);
      return eta_used;
    }
    case OptKind::steepest: {
      SteepestSolution sol = solve_modular(g, ModularNormSpec(opt.entries), opt.lambda);
      duals = sol.dual_values;
      for (std::size_t l = 0; l < w.size(); ++l) w[l] = w[l] + sol.updates[l];
      return sol.step_size;
    }
  }
  return 0.0;
}

json optimizer_state_json(const OptimizerRuntime& opt) {
  switch (opt.kind) {
    case OptKind::adam:
      return json(opt.adam);
    case OptKind::shampoo:
      return json(opt.shampoo);
    case OptKind::prodigy:
      return json(opt.prodigy);
    default:
      return json::object();  // stateless steppers
  }
}

void load_optimizer_state(OptimizerRuntime& opt, const json& j) {
  switch (opt.kind) {
    case OptKind::adam:
      j.get_to(opt.adam);
      break;
    case OptKind::shampoo:
      j.get_to(opt.shampoo);
      break;
    case OptKind::prodigy:
      j.get_to(opt.prodigy);
      break;
    default:
      break;
  }
}

struct RunOutcome {
  bool aborted = false;
  std::string reason;
};

std::string config_digest(const ExperimentConfig& cfg) {
  const std::string canon = cfg.raw.dump() + "|" + std::to_string(cfg.seed);
  char buf[20];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a(canon)));
  return buf;
}

std::vector<std::string> record_columns(std::size_t layers) {
  std::vector<std::string> cols = {"step", "loss", "eta"};
  for (std::size_t l = 0; l < layers; ++l) cols.push_back("dual_norm_" + std::to_string(l));
  cols.push_back("cos_theta");
  cols.push_back("rms_displacement");
  return cols;
}

RunOutcome run_experiment(const ExperimentConfig& config) {
  ExperimentConfig cfg = config;  // owns mutable optimizer state for this run
  Dataset data = make_dataset(cfg.d_in, cfg.d_out, cfg.n, cfg.seed, cfg.noise);

  LayerList w;
  {
    Rng weights = Rng(cfg.seed).split("weights");
    if (cfg.task == "linear") {
      Matrix m(cfg.d_out, cfg.d_in);
      for (double& v : m.data()) v = weights.gaussian() / std::sqrt(double(cfg.d_in));
      w.push_back(std::move(m));
    } else {
      Matrix w1(cfg.hidden, cfg.d_in);
      for (double& v : w1.data()) v = weights.gaussian() / std::sqrt(double(cfg.d_in));
      Matrix w2(cfg.d_out, cfg.hidden);
      for (double& v : w2.data()) v = weights.gaussian() / std::sqrt(double(cfg.hidden));
      w.push_back(std::move(w1));
      w.push_back(std::move(w2));
    }
  }
  const std::size_t layers = w.size();
  const std::string digest = config_digest(cfg);
  const std::filesystem::path checkpoint_path =
      cfg.output_path.string() + ".checkpoint.json";

  std::vector<std::vector<double>> rows;
  int start_step = 0;
  if (std::filesystem::exists(checkpoint_path)) {
    try {
      json ck = json::parse(io::read_text(checkpoint_path));
      if (ck.at("digest").get<std::string>() == digest) {
        start_step = ck.at("steps_done").get<int>();
        ck.at("weights").get_to(w);
        load_optimizer_state(cfg.opt, ck.at("optimizer"));
        rows = ck.at("rows").get<std::vector<std::vector<double>>>();
      }
    } catch (const json::exception&) {
      start_step = 0;  // unreadable checkpoint: start over
      rows.clear();
    }
  }

  const LayerList w0_snapshot = start_step == 0 ? w : [&] {
    // The displacement diagnostics need the run's initial weights, which are
    // reproducible from the seed regardless of where we resumed.
    Rng weights = Rng(cfg.seed).split("weights");
    LayerList init;
    if (cfg.task == "linear") {
      Matrix m(cfg.d_out, cfg.d_in);
      for (double& v : m.data()) v = weights.gaussian() / std::sqrt(double(cfg.d_in));
      init.push_back(std::move(m));
    } else {
      Matrix w1(cfg.hidden, cfg.d_in);
      for (double& v : w1.data()) v = weights.gaussian() / std::sqrt(double(cfg.d_in));
      Matrix w2(cfg.d_out, cfg.hidden);
      for (double& v : w2.data()) v = weights.gaussian() / std::sqrt(double(cfg.hidden));
      init.push_back(std::move(w1));
      init.push_back(std::move(w2));
    }
    return init;
  }();

  auto write_checkpoint = [&](int steps_done) {
    json ck;
    ck["digest"] = digest;
    ck["steps_done"] = steps_done;
    ck["weights"] = w;
    ck["optimizer"] = optimizer_state_json(cfg.opt);
    ck["rows"] = rows;
    io::write_text_atomic(checkpoint_path, ck.dump() + "\n");
  };

  RunOutcome outcome;
  std::vector<double> duals;
  for (int step = start_step; step < cfg.steps; ++step) {
    double loss;
    LayerList grads;
    if (cfg.task == "linear") {
      LinearModel model{w[0]};
      loss = square_loss(model, data);
      grads.push_back(square_loss_grad(model, data));
    } else {
      auto [l, g] = two_layer_forward_backward(TwoLayerNet{w[0], w[1]}, data);
      loss = l;
      grads = std::move(g);
    }

    // Displacement diagnostics are measured at the pre-step weights.
    double disp_sq = 0.0;
    double gdot = 0.0;
    double g_sq = 0.0;
    for (std::size_t l = 0; l < layers; ++l) {
      auto wd = w[l].data();
      auto w0d = w0_snapshot[l].data();
      auto gd = grads[l].data();
      for (std::size_t i = 0; i < wd.size(); ++i) {
        const double d = w0d[i] - wd[i];
        disp_sq += d * d;
        gdot += gd[i] * d;
        g_sq += gd[i] * gd[i];
      }
    }
    const double cos_theta =
        disp_sq > 0.0 && g_sq > 0.0 ? gdot / (std::sqrt(g_sq) * std::sqrt(disp_sq)) : 0.0;
    const double rms_disp = std::sqrt(disp_sq / double(total_entries(w)));

    if (!std::isfinite(loss)) {
      outcome.aborted = true;
      outcome.reason = "non-finite loss at step " + std::to_string(step);
      std::vector<double> row = {double(step), loss, 0.0};
      for (std::size_t l = 0; l < layers; ++l) row.push_back(0.0);
      row.push_back(cos_theta);
      row.push_back(rms_disp);
      rows.push_back(std::move(row));
      break;
    }

    const double eta = apply_step(cfg.opt, w, grads, duals);

    std::vector<double> row = {double(step), loss, eta};
    row.insert(row.end(), duals.begin(), duals.end());
    row.push_back(cos_theta);
    row.push_back(rms_disp);
    rows.push_back(std::move(row));

    const int done = step + 1;
    if (done % 100 == 0 && done < cfg.steps) write_checkpoint(done);
  }

  if (outcome.aborted) {
    // A fresh rerun reproduces the abort exactly; resuming past it would
    // silently drop the abort reason from the rebuilt record.
    std::error_code ec;
    std::filesystem::remove(checkpoint_path, ec);
  } else {
    write_checkpoint(int(rows.size()));
  }

  const std::vector<std::string> cols = record_columns(layers);
  std::string csv;
  for (std::size_t c = 0; c < cols.size(); ++c) {
    if (c > 0) csv += ',';
    csv += cols[c];
  }
  csv += '\n';
  for (const auto& row : rows) {
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (c > 0) csv += ',';
      csv += io::format_double(row[c]);
    }
    csv += '\n';
  }
  io::write_text_atomic(cfg.output_path, csv);

  json record;
  record["config"] = cfg.raw;
  record["seed"] = cfg.seed;
  record["columns"] = cols;
  record["rows"] = rows;
  record["abort_reason"] = outcome.aborted ? json(outcome.reason) : json(nullptr);
  if (!rows.empty()) record["final_loss"] = rows.back()[1];
  std::filesystem::path record_path = cfg.output_path;
  record_path.replace_extension("json");
  io::write_text_atomic(record_path, record.dump(2) + "\n");
  return outcome;
}

int cmd_train(const std::string& config_path, std::optional<std::uint64_t> seed_override,
              const std::string& output_override, int thread_cap) {
  json root = json::parse(io::read_text(config_path));
  std::vector<ExperimentConfig> experiments;
  if (root.contains("experiments")) {
    if (!output_override.empty() && root.at("experiments").size() > 1) {
      throw ValidationError("--output is ambiguous with multiple experiments");
    }
    for (const json& j : root.at("experiments")) {
      experiments.push_back(parse_experiment(j, seed_override, output_override));
    }
  } else {
    experiments.push_back(parse_experiment(root, seed_override, output_override));
  }
  if (experiments.empty()) throw ValidationError("config lists no experiments");
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    for (std::size_t k = i + 1; k < experiments.size(); ++k) {
      if (experiments[i].output_path == experiments[k].output_path) {
        throw ValidationError("experiments share output_path '" +
                              experiments[i].output_path.string() + "'");
      }
    }
  }

  std::size_t workers = std::min<std::size_t>(
      experiments.size(),
      thread_cap > 0 ? std::size_t(thread_cap)
                     : std::max<std::size_t>(1, std::thread::hardware_concurrency()));
  std::vector<RunOutcome> outcomes(experiments.size());
  std::atomic<std::size_t> cursor{0};
  auto worker = [&] {
    for (std::size_t i = cursor.fetch_add(1); i < experiments.size();
         i = cursor.fetch_add(1)) {
      try {
        outcomes[i] = run_experiment(experiments[i]);
      } catch (const std::exception& e) {
        outcomes[i].aborted = true;
        outcomes[i].reason = e.what();
      }
    }
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    pool.reserve(workers);
    for (std::size_t t = 0; t < workers; ++t) pool.emplace_back(worker);
    for (std::thread& t : pool) t.join();
  }

  bool any_abort = false;
  for (std::size_t i = 0; i < experiments.size(); ++i) {
    if (outcomes[i].aborted) {
      any_abort = true;
      std::cerr << "run " << experiments[i].output_path.string()
                << " aborted: " << outcomes[i].reason << "\n";
    } else {
      std::cout << "wrote " << experiments[i].output_path.string() << "\n";
    }
  }
  return any_abort ? kExitNumerical : kExitOk;
}

// ---------------------------------------------------- orthogonalize-trace

int cmd_orthogonalize_trace(const std::string& matrix_path,
                            const std::string& coefficients, int iterations,
                            const std::string& normalization,
                            const std::string& output) {
  Matrix g = io::read_matrix_csv(matrix_path);
  if (is_zero(g)) throw ValidationError("input matrix is zero; nothing to orthogonalize");

  std::vector<double> coeffs = io::parse_row(coefficients);
  SvNormalization norm_kind;
  if (normalization == "spectral") {
    norm_kind = SvNormalization::spectral;
  } else if (normalization == "frobenius") {
    norm_kind = SvNormalization::frobenius;
  } else {
    throw ValidationError("normalization must be 'spectral' or 'frobenius', got '" +
                          normalization + "'");
  }
  PolynomialSpec spec(std::move(coeffs), iterations, norm_kind);

  const Matrix target = orthogonalize_via_svd(g);
  std::vector<Matrix> trace = newton_schulz_trace(g, spec);

  std::string csv = "iteration,frobenius_error,sigma_min,sigma_max\n";
  for (std::size_t t = 0; t < trace.size(); ++t) {
    SvdFactors f = reduced_svd(trace[t]);
    csv += io::format_double(double(t));
    csv += ',';
    csv += io::format_double(frobenius_norm(trace[t] - target));
    csv += ',';
    csv += io::format_double(f.sigma.back());
    csv += ',';
    csv += io::format_double(f.sigma.front());
    csv += '\n';
  }
  if (output.empty()) {
    std::cout << csv;
  } else {
    io::write_text_atomic(output, csv);
    std::cout << "wrote " << output << "\n";
  }
  return kExitOk;
}

// -------------------------------------------------------------- norm-table

int cmd_norm_table(const std::string& matrix_path, bool json_out,
                   const std::string& output) {
  Matrix m = io::read_matrix_csv(matrix_path);

  json table;
  table["rows"] = m.rows();
  table["cols"] = m.cols();
  table["norms"] = json::array();
  for (const std::string& name : norm_spec_names()) {
    const NormSpec spec = *norm_spec_from_name(name);
    if (spec.vector_only() && m.cols() != 1) continue;
    json entry;
    entry["name"] = name;
    entry["value"] =
        spec.vector_only() ? vector_norm(m, spec) : matrix_norm(m, spec);
    try {
      entry["dual"] = dual_norm(m, spec);
    } catch (const UnsupportedNormError&) {
      entry["dual"] = nullptr;
    }
    table["norms"].push_back(std::move(entry));
  }
  table["directions"] = json::array();
  for (const NormTableRow& row : reference_table()) {
    table["directions"].push_back(
        {{"domain", row.domain}, {"norm", row.norm_name}, {"solution", row.solution}});
  }

  std::ostringstream text;
  if (json_out) {
    text << table.dump(2) << "\n";
  } else {
    text << m.rows() << "x" << m.cols() << " matrix\n\n";
    text << "norm            value                     dual\n";
    for (const json& entry : table["norms"]) {
      char line[96];
      const std::string dual = entry["dual"].is_null()
                                   ? "-"
                                   : io::format_double(entry["dual"].get<double>());
      std::snprintf(line, sizeof(line), "%-15s %-25s %s\n",
                    entry["name"].get<std::string>().c_str(),
                    io::format_double(entry["value"].get<double>()).c_str(),
                    dual.c_str());
      text << line;
    }
    text << "\nsteepest descent directions (unit sharpness)\n";
    for (const json& d : table["directions"]) {
      char line[96];
      std::snprintf(line, sizeof(line), "%-7s %-15s %s\n",
                    d["domain"].get<std::string>().c_str(),
                    d["norm"].get<std::string>().c_str(),
                    d["solution"].get<std::string>().c_str());
      text << line;
    }
  }
  if (output.empty()) {
    std::cout << text.str();
  } else {
    io::write_text_atomic(output, text.str());
    std::cout << "wrote " << output << "\n";
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"norm-aware steepest descent toolkit"};
  app.require_subcommand(1);

  std::string suite = "all";
  std::uint64_t seed = 0;
  bool json_out = false;
  std::string output;
  std::string config_path;
  bool seed_passed = false;

  CLI::App* verify = app.add_subcommand("verify", "run property-check suites");
  verify->add_option("suite", suite, "all, linalg, norms, steepest, optimizers, models");
  verify->add_option("--seed", seed, "seed for the randomized checks");
  verify->add_flag("--json", json_out, "print the report as JSON");
  verify->add_option("--output", output, "also write the JSON report here");

  CLI::App* train = app.add_subcommand("train", "run training experiments from a config");
  train->add_option("--config", config_path, "JSON experiment config")->required();
  train->add_option("--seed", seed, "override the dataset seed")
      ->each([&](const std::string&) { seed_passed = true; });
  train->add_option("--output", output, "override output_path (single experiment only)");

  std::string matrix_path;
  std::string coefficients = "1.5,-0.5";
  int iterations = 30;
  std::string normalization = "spectral";
  CLI::App* trace =
      app.add_subcommand("orthogonalize-trace", "per-iteration orthogonalization error");
  trace->add_option("matrix", matrix_path, "CSV matrix file")->required();
  trace->add_option("--coefficients", coefficients, "odd-polynomial coefficients");
  trace->add_option("--iterations", iterations, "iteration count")
      ->check(CLI::PositiveNumber);
  trace->add_option("--normalization", normalization, "spectral or frobenius");
  trace->add_option("--output", output, "write the CSV here instead of stdout");

  CLI::App* table = app.add_subcommand("norm-table", "norms and duals of a matrix");
  table->add_option("matrix", matrix_path, "CSV matrix file")->required();
  table->add_flag("--json", json_out, "emit JSON");
  table->add_option("--output", output, "write here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitUsage;
  }

  const int thread_cap = env_thread_cap();
  if (thread_cap > 0) normdescent::kernels::set_max_threads(thread_cap);

  try {
    if (*verify) return cmd_verify(suite, seed, json_out, output);
    if (*train) {
      return cmd_train(config_path,
                       seed_passed ? std::optional<std::uint64_t>(seed) : std::nullopt,
                       output, thread_cap);
    }
    if (*trace) {
      return cmd_orthogonalize_trace(matrix_path, coefficients, iterations,
                                     normalization, output);
    }
    if (*table) return cmd_norm_table(matrix_path, json_out, output);
  } catch (const nlohmann::json::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const normdescent::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kExitUsage;
  }
  return kExitUsage;
}
