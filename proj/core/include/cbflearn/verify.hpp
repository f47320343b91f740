#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace cbflearn {

struct VerifySettings {
  bool quick = false;
  std::uint64_t seed = 12345;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

// Full property suite: gradient oracles, QP brute-force equivalence, kappa
// monotonicity, and the discrete forward-invariance check.
std::vector<PropertyResult> run_property_suite(const VerifySettings& settings);

}  // namespace cbflearn
