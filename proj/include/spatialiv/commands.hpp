#ifndef SPATIALIV_COMMANDS_HPP
#define SPATIALIV_COMMANDS_HPP

#include <ostream>
#include <string>
#include <vector>

#include "spatialiv/config.hpp"

namespace spatialiv {

enum ExitCode : int { kExitOk = 0, kExitConfig = 2, kExitData = 3, kExitBand = 4 };

/// Config-type errors map to 2, everything else raised while reading or
/// analysing data maps to 3.
int exit_code_for(ErrorCode code);

struct CommandResult {
  int exit_code = kExitOk;
  std::vector<std::string> files;  // paths written, in order
};

// Each command writes into c.output_dir, always including resolved_config.json.
CommandResult cmd_simulate(const RunConfig& c, std::ostream& log);
CommandResult cmd_decompose(const RunConfig& c, std::ostream& log);
CommandResult cmd_estimate(const RunConfig& c, std::ostream& log);
CommandResult cmd_benchmark(const RunConfig& c, std::ostream& log);
CommandResult cmd_sensitivity(const RunConfig& c, std::ostream& log);
CommandResult cmd_erc(const RunConfig& c, std::ostream& log);

const std::vector<std::string>& command_names();
/// Dispatches by name; ConfigError for an unknown command.
CommandResult run_command(const std::string& name, const RunConfig& c, std::ostream& log);

}  // namespace spatialiv

#endif
