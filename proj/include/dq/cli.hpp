#pragma once

#include "dq/serialize.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace dq {

// Batch experiment runner shared by the `dq` binary and the test suite.
// Writes <output_dir>/report.json and <output_dir>/tables.csv.
// Exit codes: 0 pass, 1 assertion failure, 2 config error, 3 blow-up.
int run_experiment(const std::string& command, json config,
                   const std::string& output_dir,
                   std::optional<uint64_t> seed_override, bool quiet);

inline constexpr const char* kCommands[] = {
    "lattice-evolve", "wave-operators", "scatter",    "lie-check",
    "linearize",      "star-check",     "push-star",  "ham-check"};

} // namespace dq
