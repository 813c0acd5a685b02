#include "normdescent/rng.hpp"

#include <cmath>
#include <numbers>

namespace normdescent {

namespace {

std::uint64_t mix(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

}  // namespace

std::uint64_t Rng::next_u64() {
  state_ += 0x9e3779b97f4a7c15ull;
  return mix(state_);
}

double Rng::uniform() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::gaussian() {
  // u1 in (0, 1] keeps the log finite.
  double u1 = 1.0 - uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

double Rng::gaussian(double mean, double stddev) { return mean + stddev * gaussian(); }

Rng Rng::split(std::string_view name) const {
  return Rng(mix(seed_ ^ fnv1a(name)));
}

Rng Rng::split(std::string_view name, std::uint64_t index) const {
  return Rng(mix(mix(seed_ ^ fnv1a(name)) ^ (index + 0x9e3779b97f4a7c15ull)));
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t basis) {
  std::uint64_t h = basis;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace normdescent
