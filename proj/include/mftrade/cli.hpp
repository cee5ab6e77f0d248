#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mftrade::cli {

inline constexpr std::array<std::string_view, 8> kCommands = {
    "threshold", "rate", "simulate", "slope-search", "risk-calibrate", "fit-ou", "fig2", "fig3"};

struct RunConfig {
  std::string command;
  std::string config_path;  // empty: built-in defaults
  std::string output_dir = ".";
  std::vector<std::pair<std::string, std::string>> overrides;
  std::optional<std::uint64_t> master_seed;
  std::optional<std::size_t> repetitions;
};

bool is_command(std::string_view name);

// Writes <command>.json (plus CSV tables for sweeps) into output_dir.
// Returns 0 on success; on failure prints a JSON error record to err, also
// leaves it in output_dir/error.json when possible, and returns the error's
// exit code.
int run(const RunConfig& config, std::ostream& out, std::ostream& err);

// argv front end. Unknown commands print usage and return 1.
int main_entry(int argc, char** argv);

}  // namespace mftrade::cli
