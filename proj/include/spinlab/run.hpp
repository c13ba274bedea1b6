#pragma once

#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

namespace spinlab::run {

inline constexpr const char* kVersion = "1.0.0";

struct RunResult {
  int exit_code = 0;
  nlohmann::ordered_json report;
  // Bulk-field outputs as (file name, bytes); the binary writes them under
  // --out.  Kept in memory so reports stay testable in-process.
  std::vector<std::pair<std::string, std::string>> artifacts;
};

// Executes one subcommand against a JSON config.  Exit codes: 0 when every
// declared tolerance in the report is met, 2 on schema violations, 3 on
// numerical failure (including missed tolerances), 4 for unknown commands.
// Reports are deterministic: identical configs on the same build produce
// byte-identical dumps.  SPINLAB_THREADS caps internal parallelism (default
// 1); the effective value is recorded in the report.
RunResult run_command(const std::string& command, const nlohmann::ordered_json& config,
                      const std::string& tolerance_profile = "default");

std::string usage();

}  // namespace spinlab::run
