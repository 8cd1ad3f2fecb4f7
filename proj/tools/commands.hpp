#pragma once

#include "config.hpp"
#include "output.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace trapscape::cli {

struct Context {
  std::string command;
  RunConfig config;
  std::filesystem::path out;
  unsigned threads = 1;
  Format format = Format::csv;
  std::optional<Range> sweep;  // --sweep override for `nodes`
};

/// Runs one subcommand and writes its artifacts. Returns the process exit code;
/// configuration problems throw ConfigError, numerical ones trapscape errors.
int run_command(const Context& ctx);

/// Names accepted by run_command.
const std::vector<std::string>& command_names();

}  // namespace trapscape::cli
