#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace tacteit {

enum class SelftestFault { None, EimTranspose };

struct SelftestOptions {
  int refinement_level = 1;
  int phantoms = 4;
  std::uint64_t seed = 1;
  /// Negative control: read the compact EIM buffer with the wrong storage
  /// order before augmenting, which the oracle checks must catch.
  SelftestFault fault = SelftestFault::None;
};

struct PropertyResult {
  std::string name;
  bool passed = false;
  double measured = 0.0;
  double tolerance = 0.0;
  std::string detail;
};

std::vector<PropertyResult> run_selftest(const SelftestOptions& options);

}  // namespace tacteit
