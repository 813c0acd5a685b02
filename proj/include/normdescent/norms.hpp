#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "normdescent/matrix.hpp"

namespace normdescent {

enum class NormKind {
  vector_lp,
  vector_rms,
  frobenius,
  spectral,
  schatten_p,
  induced_l1_to_lp,
  induced_lp_to_linf,
  rms_to_rms,
  l1_to_rms,
};

// A norm choice. p-parametrized kinds accept p in [1, inf]; infinity is the
// usual IEEE infinity. The dimension-dependent scale factors of the RMS
// flavors are functions of the matrix handed to the evaluation calls.
class NormSpec {
 public:
  static NormSpec vector_lp(double p);
  static NormSpec vector_rms() { return NormSpec(NormKind::vector_rms); }
  static NormSpec frobenius() { return NormSpec(NormKind::frobenius); }
  static NormSpec spectral() { return NormSpec(NormKind::spectral); }
  static NormSpec schatten(double p);
  static NormSpec induced_l1_to_lp(double p);
  static NormSpec induced_lp_to_linf(double p);
  // max |entry|; the l1 -> linf operator norm.
  static NormSpec max_abs_entry() { return induced_l1_to_lp(kInf); }
  static NormSpec rms_to_rms() { return NormSpec(NormKind::rms_to_rms); }
  static NormSpec l1_to_rms() { return NormSpec(NormKind::l1_to_rms); }

  NormKind kind() const { return kind_; }
  double p() const { return p_; }
  bool vector_only() const {
    return kind_ == NormKind::vector_lp || kind_ == NormKind::vector_rms;
  }
  std::string name() const;

  static constexpr double kInf = std::numeric_limits<double>::infinity();

 private:
  explicit NormSpec(NormKind kind, double p = 2.0) : kind_(kind), p_(p) {}
  NormKind kind_;
  double p_;
};

// Name registry used by the CLI and config files: "l1", "l2", "linf", "rms",
// "frobenius", "spectral", "nuclear", "max_abs_entry", "l1_to_l2",
// "l2_to_linf", "rms_to_rms", "l1_to_rms".
std::optional<NormSpec> norm_spec_from_name(const std::string& name);
std::vector<std::string> norm_spec_names();

struct ModularEntry {
  double scale;
  NormSpec norm;
};

// max_l scale_l * ||W_l||_l over a layer list; scales must be positive.
class ModularNormSpec {
 public:
  explicit ModularNormSpec(std::vector<ModularEntry> entries);
  const std::vector<ModularEntry>& entries() const { return entries_; }
  std::size_t size() const { return entries_.size(); }

 private:
  std::vector<ModularEntry> entries_;
};

// ||v|| for a column vector under a vector spec. Non-vectors raise ShapeError,
// matrix-only specs raise ValidationError.
double vector_norm(const Matrix& v, const NormSpec& spec);

// ||m|| under a matrix spec. SVD-backed kinds (spectral, schatten) require a
// nonzero matrix; vector-only specs raise ValidationError.
double matrix_norm(const Matrix& m, const NormSpec& spec);

// Dual norm ||g||^dagger = max_{||t|| = 1} <g, t>. Zero g gives 0. Kinds with
// no implemented closed form raise UnsupportedNormError, never a wrong value.
double dual_norm(const Matrix& g, const NormSpec& spec);

// A unit-norm maximizer of <g, t>. Zero g raises ValidationError (there is no
// meaningful direction); sign-based directions use sign(0) = 0; ties in the
// l1 case resolve to the first maximal coordinate.
Matrix lmo_direction(const Matrix& g, const NormSpec& spec);

// max over layers of the max-abs-entry norm. Equals the linf norm of the
// flattened concatenation exactly.
double max_of_max_norm(const LayerList& ws);

// max over layers of scale_l * ||W_l||_l. Zero layers contribute zero even
// under SVD-backed norms.
double modular_norm(const LayerList& ws, const ModularNormSpec& spec);

// Sampling lower bound on the dual norm: max over random Gaussian t of
// <g, t/||t||>. A test oracle; deterministic given the seed.
double brute_force_dual(const Matrix& g, const NormSpec& spec, int samples,
                        std::uint64_t seed);

}  // namespace normdescent
