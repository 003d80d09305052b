#ifndef RECONFIG_TOOLS_CLI_HPP
#define RECONFIG_TOOLS_CLI_HPP

#include "reconfig/runtime.hpp"

#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace reconfig::cli {

// Exit codes shared by every subcommand.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitSetup = 2;

struct ScriptCommand {
  enum class Kind { Invoke, Swap, Bind, Unbind, Add, Remove, ExpectOk, ExpectError };

  std::size_t line = 0;
  Kind kind = Kind::Invoke;
  std::vector<std::string> args; // Add keeps the inline element as one argument
  std::string text;
};

/// Line-oriented; blank lines and `#` comments are skipped. Throws
/// ParseError naming the line for unknown or malformed commands.
std::vector<ScriptCommand> parse_script(std::string_view text);

struct Options {
  std::filesystem::path adl;
  std::optional<std::filesystem::path> corpus;
  Granularity granularity = Granularity::PerComponent;
};

int cmd_check(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_plan(const Options& opts, std::ostream& out, std::ostream& err);
int cmd_run(const Options& opts, const std::filesystem::path& script,
            const std::optional<std::filesystem::path>& trace, std::ostream& out, std::ostream& err);
int cmd_bench(const Options& opts, std::uint64_t calls, const std::optional<std::string>& entry,
              const std::optional<std::string>& method, std::ostream& out, std::ostream& err);

/// Full command line entry point (argv[0] included).
int main(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

} // namespace reconfig::cli

#endif
