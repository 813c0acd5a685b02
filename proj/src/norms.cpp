#include "normdescent/norms.hpp"

#include <cmath>
#include <span>

#include "normdescent/linalg.hpp"
#include "normdescent/rng.hpp"

namespace normdescent {

namespace {

void require_p(double p) {
  if (std::isnan(p) || p < 1.0)
    throw ValidationError("norm exponent p must lie in [1, inf]");
}

double conjugate_exponent(double p) {
  if (p == 1.0) return NormSpec::kInf;
  if (p == NormSpec::kInf) return 1.0;
  return p / (p - 1.0);
}

// lp norm of a contiguous range, accumulated in element order. p = 1 and
// p = inf take exact paths; the general case rescales by the max to avoid
// overflow.
double lp_norm(std::span<const double> x, double p) {
  if (p == NormSpec::kInf) {
    double best = 0.0;
    for (double v : x) best = std::max(best, std::abs(v));
    return best;
  }
  if (p == 1.0) {
    double acc = 0.0;
    for (double v : x) acc += std::abs(v);
    return acc;
  }
  if (p == 2.0) {
    double acc = 0.0;
    for (double v : x) acc += v * v;
    return std::sqrt(acc);
  }
  double scale = 0.0;
  for (double v : x) scale = std::max(scale, std::abs(v));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (double v : x) acc += std::pow(std::abs(v) / scale, p);
  return scale * std::pow(acc, 1.0 / p);
}

double column_lp_norm(const Matrix& m, std::size_t j, double p) {
  std::vector<double> col(m.rows());
  for (std::size_t i = 0; i < m.rows(); ++i) col[i] = m(i, j);
  return lp_norm(col, p);
}

double sign_of(double v) { return v > 0.0 ? 1.0 : (v < 0.0 ? -1.0 : 0.0); }

}  // namespace

NormSpec NormSpec::vector_lp(double p) {
  require_p(p);
  return NormSpec(NormKind::vector_lp, p);
}

NormSpec NormSpec::schatten(double p) {
  require_p(p);
  return NormSpec(NormKind::schatten_p, p);
}

NormSpec NormSpec::induced_l1_to_lp(double p) {
  require_p(p);
  return NormSpec(NormKind::induced_l1_to_lp, p);
}

NormSpec NormSpec::induced_lp_to_linf(double p) {
  require_p(p);
  return NormSpec(NormKind::induced_lp_to_linf, p);
}

std::string NormSpec::name() const {
  auto ptag = [this]() -> std::string {
    if (p_ == kInf) return "inf";
    if (p_ == static_cast<double>(static_cast<long>(p_)))
      return std::to_string(static_cast<long>(p_));
    return std::to_string(p_);
  };
  switch (kind_) {
    case NormKind::vector_lp: return "l" + ptag();
    case NormKind::vector_rms: return "rms";
    case NormKind::frobenius: return "frobenius";
    case NormKind::spectral: return "spectral";
    case NormKind::schatten_p:
      return p_ == 1.0 ? "nuclear" : "schatten_" + ptag();
    case NormKind::induced_l1_to_lp:
      return p_ == kInf ? "max_abs_entry" : "l1_to_l" + ptag();
    case NormKind::induced_lp_to_linf:
      return p_ == 1.0 ? "max_abs_entry" : "l" + ptag() + "_to_linf";
    case NormKind::rms_to_rms: return "rms_to_rms";
    case NormKind::l1_to_rms: return "l1_to_rms";
  }
  return "unknown";
}

std::optional<NormSpec> norm_spec_from_name(const std::string& name) {
  if (name == "l1") return NormSpec::vector_lp(1.0);
  if (name == "l2") return NormSpec::vector_lp(2.0);
  if (name == "linf") return NormSpec::vector_lp(NormSpec::kInf);
  if (name == "rms") return NormSpec::vector_rms();
  if (name == "frobenius") return NormSpec::frobenius();
  if (name == "spectral") return NormSpec::spectral();
  if (name == "nuclear") return NormSpec::schatten(1.0);
  if (name == "max_abs_entry") return NormSpec::max_abs_entry();
  if (name == "l1_to_l2") return NormSpec::induced_l1_to_lp(2.0);
  if (name == "l2_to_linf") return NormSpec::induced_lp_to_linf(2.0);
  if (name == "rms_to_rms") return NormSpec::rms_to_rms();
  if (name == "l1_to_rms") return NormSpec::l1_to_rms();
  return std::nullopt;
}

std::vector<std::string> norm_spec_names() {
  return {"l1",           "l2",       "linf",     "rms",        "frobenius",
          "spectral",     "nuclear",  "max_abs_entry",          "l1_to_l2",
          "l2_to_linf",   "rms_to_rms",           "l1_to_rms"};
}

ModularNormSpec::ModularNormSpec(std::vector<ModularEntry> entries)
    : entries_(std::move(entries)) {
  if (entries_.empty()) throw ValidationError("modular norm needs at least one layer");
  for (const ModularEntry& e : entries_)
    if (!(e.scale > 0.0) || !std::isfinite(e.scale))
      throw ValidationError("modular norm scales must be positive and finite");
}

double vector_norm(const Matrix& v, const NormSpec& spec) {
  if (v.cols() != 1)
    throw ShapeError("vector_norm: expected a column vector, got " +
                     std::to_string(v.rows()) + "x" + std::to_string(v.cols()));
  switch (spec.kind()) {
    case NormKind::vector_lp:
      return lp_norm(v.data(), spec.p());
    case NormKind::vector_rms:
      return lp_norm(v.data(), 2.0) / std::sqrt(static_cast<double>(v.rows()));
    default:
      throw ValidationError("vector_norm: spec '" + spec.name() + "' is not a vector norm");
  }
}

double matrix_norm(const Matrix& m, const NormSpec& spec) {
  switch (spec.kind()) {
    case NormKind::vector_lp:
    case NormKind::vector_rms:
      throw ValidationError("matrix_norm: spec '" + spec.name() + "' is vector-only");
    case NormKind::frobenius:
      return frobenius_norm(m);
    case NormKind::spectral:
      return reduced_svd(m).sigma.front();
    case NormKind::schatten_p: {
      SvdFactors f = reduced_svd(m);
      return lp_norm(f.sigma, spec.p());
    }
    case NormKind::induced_l1_to_lp: {
      // max over columns of the column lp norm
      double best = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j)
        best = std::max(best, column_lp_norm(m, j, spec.p()));
      return best;
    }
    case NormKind::induced_lp_to_linf: {
      // max over rows of the row norm under the conjugate exponent
      const double q = conjugate_exponent(spec.p());
      double best = 0.0;
      for (std::size_t i = 0; i < m.rows(); ++i)
        best = std::max(best, lp_norm({m.row(i), m.cols()}, q));
      return best;
    }
    case NormKind::rms_to_rms:
      return std::sqrt(static_cast<double>(m.cols()) / static_cast<double>(m.rows())) *
             reduced_svd(m).sigma.front();
    case NormKind::l1_to_rms: {
      double best = 0.0;
      for (std::size_t j = 0; j < m.cols(); ++j)
        best = std::max(best, column_lp_norm(m, j, 2.0));
      return best / std::sqrt(static_cast<double>(m.rows()));
    }
  }
  throw ValidationError("matrix_norm: unknown spec");
}

namespace {

double nuclear_norm(const Matrix& g) {
  SvdFactors f = reduced_svd(g);
  double acc = 0.0;
  for (double s : f.sigma) acc += s;
  return acc;
}

double sum_column_l2(const Matrix& g) {
  double acc = 0.0;
  for (std::size_t j = 0; j < g.cols(); ++j) acc += column_lp_norm(g, j, 2.0);
  return acc;
}

void require_vector_arg(const Matrix& g, const NormSpec& spec) {
  if (g.cols() != 1)
    throw ShapeError("spec '" + spec.name() + "' applies to column vectors, got " +
                     std::to_string(g.rows()) + "x" + std::to_string(g.cols()));
}

[[noreturn]] void unsupported_dual(const NormSpec& spec) {
  throw UnsupportedNormError("no closed-form dual/LMO implemented for '" + spec.name() +
                             "'");
}

}  // namespace

double dual_norm(const Matrix& g, const NormSpec& spec) {
  if (spec.vector_only()) require_vector_arg(g, spec);
  if (is_zero(g)) return 0.0;
  switch (spec.kind()) {
    case NormKind::vector_lp:
      return lp_norm(g.data(), conjugate_exponent(spec.p()));
    case NormKind::vector_rms:
      return std::sqrt(static_cast<double>(g.rows())) * lp_norm(g.data(), 2.0);
    case NormKind::frobenius:
      return frobenius_norm(g);
    case NormKind::spectral:
      return nuclear_norm(g);
    case NormKind::schatten_p: {
      SvdFactors f = reduced_svd(g);
      return lp_norm(f.sigma, conjugate_exponent(spec.p()));
    }
    case NormKind::induced_l1_to_lp:
      if (spec.p() == NormSpec::kInf) return lp_norm(g.data(), 1.0);
      if (spec.p() == 2.0) return sum_column_l2(g);
      unsupported_dual(spec);
    case NormKind::induced_lp_to_linf:
      if (spec.p() == 1.0) return lp_norm(g.data(), 1.0);
      unsupported_dual(spec);
    case NormKind::rms_to_rms:
      // dual of c * ||.|| is (1/c) * dual; c = sqrt(n/m)
      return std::sqrt(static_cast<double>(g.rows()) / static_cast<double>(g.cols())) *
             nuclear_norm(g);
    case NormKind::l1_to_rms:
      return std::sqrt(static_cast<double>(g.rows())) * sum_column_l2(g);
  }
  throw ValidationError("dual_norm: unknown spec");
}

namespace {

Matrix sign_matrix(const Matrix& g) {
  Matrix t(g.rows(), g.cols());
  for (std::size_t i = 0; i < g.size(); ++i) t.data()[i] = sign_of(g.data()[i]);
  return t;
}

// Unit-lp maximizer of <g, t> for a coordinate vector: the classical
// t_i = sign(g_i) |g_i|^(q-1) / ||g||_q^(q-1) with conjugate q.
std::vector<double> vector_lp_lmo(std::span<const double> g, double p) {
  std::vector<double> t(g.size(), 0.0);
  if (p == NormSpec::kInf) {
    for (std::size_t i = 0; i < g.size(); ++i) t[i] = sign_of(g[i]);
    return t;
  }
  if (p == 1.0) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < g.size(); ++i)
      if (std::abs(g[i]) > std::abs(g[best])) best = i;
    t[best] = sign_of(g[best]);
    return t;
  }
  const double q = conjugate_exponent(p);
  const double qnorm = lp_norm(g, q);
  const double expo = q - 1.0;  // = q/p
  for (std::size_t i = 0; i < g.size(); ++i)
    t[i] = sign_of(g[i]) * std::pow(std::abs(g[i]) / qnorm, expo);
  return t;
}

Matrix uv_transpose(const Matrix& g) {
  SvdFactors f = reduced_svd(g);
  return kernels::matmul_transb(f.u, f.v);
}

// Each nonzero column normalized to unit l2; the l1 -> l2 operator LMO.
Matrix columns_normalized(const Matrix& g) {
  Matrix t(g.rows(), g.cols());
  for (std::size_t j = 0; j < g.cols(); ++j) {
    const double nrm = column_lp_norm(g, j, 2.0);
    if (nrm == 0.0) continue;
    for (std::size_t i = 0; i < g.rows(); ++i) t(i, j) = g(i, j) / nrm;
  }
  return t;
}

}  // namespace

Matrix lmo_direction(const Matrix& g, const NormSpec& spec) {
  if (spec.vector_only()) require_vector_arg(g, spec);
  if (is_zero(g))
    throw ValidationError("lmo_direction: zero input has no ascent direction");
  switch (spec.kind()) {
    case NormKind::vector_lp: {
      std::vector<double> t = vector_lp_lmo(g.data(), spec.p());
      return Matrix(g.rows(), 1, std::move(t));
    }
    case NormKind::vector_rms: {
      const double c = std::sqrt(static_cast<double>(g.rows())) / lp_norm(g.data(), 2.0);
      return g * c;
    }
    case NormKind::frobenius:
      return g * (1.0 / frobenius_norm(g));
    case NormKind::spectral:
      return uv_transpose(g);
    case NormKind::schatten_p: {
      SvdFactors f = reduced_svd(g);
      std::vector<double> d = vector_lp_lmo(f.sigma, spec.p());
      Matrix us = f.u;
      for (std::size_t i = 0; i < us.rows(); ++i)
        for (std::size_t j = 0; j < us.cols(); ++j) us(i, j) *= d[j];
      return kernels::matmul_transb(us, f.v);
    }
    case NormKind::induced_l1_to_lp:
      if (spec.p() == NormSpec::kInf) return sign_matrix(g);
      if (spec.p() == 2.0) return columns_normalized(g);
      unsupported_dual(spec);
    case NormKind::induced_lp_to_linf:
      if (spec.p() == 1.0) return sign_matrix(g);
      unsupported_dual(spec);
    case NormKind::rms_to_rms: {
      const double c =
          std::sqrt(static_cast<double>(g.rows()) / static_cast<double>(g.cols()));
      return uv_transpose(g) * c;
    }
    case NormKind::l1_to_rms: {
      const double c = std::sqrt(static_cast<double>(g.rows()));
      return columns_normalized(g) * c;
    }
  }
  throw ValidationError("lmo_direction: unknown spec");
}

double max_of_max_norm(const LayerList& ws) {
  if (ws.empty()) throw ValidationError("max_of_max_norm: empty layer list");
  double best = 0.0;
  for (const Matrix& w : ws) best = std::max(best, max_abs(w));
  return best;
}

namespace {

double norm_or_zero(const Matrix& m, const NormSpec& spec) {
  if (is_zero(m)) return 0.0;  // SVD-backed norms are 0 at 0 by continuity
  return matrix_norm(m, spec);
}

}  // namespace

double modular_norm(const LayerList& ws, const ModularNormSpec& spec) {
  if (ws.size() != spec.size())
    throw ShapeError("modular_norm: " + std::to_string(ws.size()) + " layers vs " +
                     std::to_string(spec.size()) + " spec entries");
  double best = 0.0;
  for (std::size_t l = 0; l < ws.size(); ++l)
    best = std::max(best, spec.entries()[l].scale * norm_or_zero(ws[l], spec.entries()[l].norm));
  return best;
}

double brute_force_dual(const Matrix& g, const NormSpec& spec, int samples,
                        std::uint64_t seed) {
  if (samples < 1) throw ValidationError("brute_force_dual: samples must be positive");
  Rng rng(seed);
  double best = 0.0;
  for (int k = 0; k < samples; ++k) {
    Matrix t(g.rows(), g.cols());
    for (std::size_t i = 0; i < t.size(); ++i) t.data()[i] = rng.gaussian();
    const double nrm = spec.vector_only() ? vector_norm(t, spec) : norm_or_zero(t, spec);
    if (nrm == 0.0) continue;
    best = std::max(best, dot(g, t) / nrm);
  }
  return best;
}

}  // namespace normdescent
