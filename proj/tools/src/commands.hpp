#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

namespace lscp::cli {

struct Overrides {
  std::optional<std::uint64_t> seed;
  std::optional<int> threads;
  std::optional<std::string> out;
};

/// Runs one subcommand. Returns the process exit code: 0 on success, 1 for
/// configuration errors, 2 for runtime failures.
int run_command(const std::string& mode, const std::filesystem::path& config_path, const Overrides& overrides);

}  // namespace lscp::cli
