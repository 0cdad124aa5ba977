#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace codesign::cli {

inline constexpr const char* kSubcommands[] = {"validate", "chain",       "stationary", "evaluate", "optimize",
                                               "codesign", "simulate",    "sensitivity", "surface",  "fit"};

struct Flags {
  std::filesystem::path out = "codesign-out";
  std::optional<std::uint64_t> seed;
  /// 0 picks the hardware concurrency.
  unsigned threads = 0;
  /// "from:to:step" or "a,b,c".
  std::optional<std::string> candidates;
  std::optional<std::size_t> iterations;
  std::optional<std::size_t> restarts;
  std::optional<double> volume;
};

/// Runs one subcommand on a config file. Writes artifacts under `flags.out`,
/// a JSON summary to `out`, and on failure an error JSON to `out` plus a
/// one-line message to `err`. Returns the process exit code.
int run_subcommand(const std::string& subcommand, const std::filesystem::path& config, const Flags& flags,
                   std::ostream& out, std::ostream& err);

/// Full command-line entry point.
int run(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace codesign::cli
