#pragma once

#include <cstdint>
#include <string_view>

namespace normdescent {

// Deterministic splittable generator. All randomness in the project flows
// from one 64-bit seed through named substreams: split("dataset") yields a
// stream that depends only on the parent's seed and the name, never on how
// many values were drawn before the split. SplitMix64 core.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : seed_(seed), state_(seed) {}

  std::uint64_t next_u64();

  // Uniform on [0, 1).
  double uniform();

  // Standard normal via Box-Muller; two uniforms consumed per value.
  double gaussian();
  double gaussian(double mean, double stddev);

  // Independent child stream; deterministic in (seed, name).
  Rng split(std::string_view name) const;
  Rng split(std::string_view name, std::uint64_t index) const;

  std::uint64_t seed() const { return seed_; }

 private:
  std::uint64_t seed_;
  std::uint64_t state_;
};

// FNV-1a over bytes; used for stream naming and config digests.
std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ull);

}  // namespace normdescent
