#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace normdescent {

struct CheckResult {
  std::string suite;
  std::string name;
  bool pass;
  double measured_error;  // worst deviation seen, in the check's own units
  std::string detail;
};

// Suite names accepted by run_verify_suite, excluding the "all" alias.
const std::vector<std::string>& verify_suites();

// Runs every check in the named suite (or all of them for "all"). Each check
// derives its randomness from seed via a named substream, so single suites
// reproduce exactly what "all" runs. Unknown names are a validation error.
std::vector<CheckResult> run_verify_suite(const std::string& suite,
                                          std::uint64_t seed);

}  // namespace normdescent
