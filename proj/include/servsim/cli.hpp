#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include "servsim/config.hpp"

namespace servsim {

/// Entry point of the `servsim` tool. Returns the process exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

/// A bundled scenario name, or a path to a config file in the same JSON
/// format. Throws SimError(UnknownScenario) or SimError(InvalidConfig).
SimConfig load_config_source(const std::string& name_or_path);

/// Parses "N1@5000". Throws SimError(InvalidConfig).
ScriptedFailure parse_fail_spec(const std::string& text);

/// Writes every bundled scenario as <dir>/<name>.json.
void write_scenario_files(const std::filesystem::path& dir);

}  // namespace servsim
