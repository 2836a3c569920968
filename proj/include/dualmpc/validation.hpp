#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace dualmpc {

struct SuiteReport {
  std::string name;
  int passed = 0;
  int failed = 0;
  double worst = 0.0;  // largest error (duality, gamma) or violation rate excess (chance)
  std::string detail;

  bool ok() const { return failed == 0 && passed > 0; }
};

/// Dual certificate value against the alternating-projection distance on random
/// separated 2D pairs (boxes and ellipses, random poses); pass if within `tol`.
SuiteReport validate_duality(int pairs, std::uint64_t seed, double tol = 1e-6);

/// D1-tightened satisfaction against nonnegativity of the raw residual at every
/// vertex of the stacked noise box, on random instances with N * dim <= 8.
SuiteReport validate_vertex_oracle(int instances, std::uint64_t seed);

/// Gaussian chance constraints driven to active equality by a small SOCP, then
/// checked by sampling: violation rate <= eps + 3 sqrt(eps (1 - eps) / samples).
SuiteReport validate_chance(int constraints, int samples, std::uint64_t seed, double epsilon = 0.0228);

/// D2 and D3 per-constraint factors at eps = 0.0228 and 0.05 against 2.00, 6.55, 1.64, 4.36.
SuiteReport validate_gamma_table();

const std::vector<std::string>& suite_names();

/// Runs one suite by name with its default sizes.
SuiteReport run_suite(const std::string& name, std::uint64_t seed);

}  // namespace dualmpc
