#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "dualmpc/scenario.hpp"

namespace dualmpc {

/// Everything one CLI invocation needs: the scenario plus experiment settings.
struct RunConfig {
  LongitudinalScenario scenario = LongitudinalScenario::intersection();
  PolicyKind policy = PolicyKind::SMPC;
  std::vector<std::uint64_t> seeds{0, 1, 2, 3, 4, 5, 6, 7, 8, 9};
  std::string out_dir = "out";

  void validate() const;
};

/// Parses YAML text. Unknown keys anywhere are rejected; missing keys keep their defaults.
RunConfig parse_config(const std::string& yaml_text);
RunConfig load_config(const std::string& path);

/// Emits a YAML document that parse_config reads back to an identical config.
std::string dump_config(const RunConfig& cfg);

/// "0-9", "1,4,7" or "3" (a single count n expands to 0..n-1 when `count_form` is set).
std::vector<std::uint64_t> parse_seed_list(const std::string& s, bool count_form);

}  // namespace dualmpc
