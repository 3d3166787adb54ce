#pragma once

#include <optional>
#include <string>

namespace mixflow_cli {

inline constexpr const char* kVersion = "0.1.0";

struct CliArgs {
  std::string command;
  std::string config_path;
  std::string out_dir;
  std::optional<unsigned long long> seed;  // overrides the config seed
  std::optional<int> threads;              // overrides the config thread count
};

// Runs one subcommand end to end. Throws the library error types; the
// caller maps them to process exit codes.
void run_command(const CliArgs& args);

// One line per recognized config key, printed under --help.
std::string config_key_help();

}  // namespace mixflow_cli
