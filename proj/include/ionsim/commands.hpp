#pragma once

// CLI orchestration: one function per subcommand, shared flag plumbing and
// exit-code mapping. Every command writes a JSON result envelope (and CSV
// tables when requested) into the configured output directory and returns
// the envelope for in-process callers (tests).

#include <cstdint>
#include <optional>
#include <string>

#include "ionsim/run_config.hpp"
#include "ionsim/serialize.hpp"

namespace ionsim {

struct CliArgs {
    std::string command;
    std::string config_path;             // empty -> defaults
    std::optional<std::string> out_dir;  // overrides output.dir
    std::optional<int> workers;          // overrides workers
    std::optional<std::uint64_t> seed;   // overrides seed
    std::optional<std::string> format;   // overrides output.format
};

// Dispatch + error mapping. Returns the process exit code:
// 0 success, 2 invalid input, 3 non-convergence, 4 resource budget.
int run_command(const CliArgs& args);

json cmd_modes(const RunConfig& cfg);
json cmd_couplings(const RunConfig& cfg);
json cmd_dynamics(const RunConfig& cfg);
json cmd_ground(const RunConfig& cfg);
json cmd_observe(const RunConfig& cfg);
json cmd_sweep(const RunConfig& cfg);
json cmd_scan(const RunConfig& cfg);

} // namespace ionsim
