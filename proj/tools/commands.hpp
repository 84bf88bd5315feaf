#ifndef LSSTREAM_TOOLS_COMMANDS_HPP
#define LSSTREAM_TOOLS_COMMANDS_HPP

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace lsstream::cli {

enum ExitCode : int {
  kSuccess = 0,
  kValidationFailure = 1,
  kDataFailure = 2,
  kCheckFailure = 3,
};

/// Resolved configuration, every value as text.
using Settings = std::map<std::string, std::string>;

struct KeyInfo {
  std::string name;
  std::string fallback;  // default for every command unless overridden
  std::string help;
};

/// Every recognised configuration key. Config files may set any of them;
/// each has a --<name> flag twin.
const std::vector<KeyInfo>& config_keys();

/// Defaults for `command`, then the config file, then the flags.
/// Unknown keys are a validation error.
Settings resolve_settings(const std::string& command,
                          const std::optional<std::filesystem::path>& config_file,
                          const Settings& flags);

int cmd_simulate(const Settings& s, std::ostream& out);
int cmd_run(const Settings& s, std::ostream& out);
int cmd_bench(const Settings& s, std::ostream& out);
int cmd_power(const Settings& s, std::ostream& out);
int cmd_doptcheck(const Settings& s, std::ostream& out);

/// Runs a command and maps exceptions to exit codes, with the message on `err`.
int dispatch(const std::string& command, const Settings& s, std::ostream& out,
             std::ostream& err);

/// Full command line entry point.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace lsstream::cli

#endif  // LSSTREAM_TOOLS_COMMANDS_HPP
