#pragma once

#include <iosfwd>
#include <memory>
#include <string>
#include <vector>

namespace CLI {
class App;
}

namespace tsrl::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitRuntime = 1;
inline constexpr int kExitUsage = 2;

struct Streams {
    std::istream& in;
    std::ostream& out;
    std::ostream& err;
};

/// The `tsrl` command with every subcommand registered; options bind into `state`.
struct Command;
struct CommandDeleter {
    void operator()(Command* c) const;
};
using CommandPtr = std::unique_ptr<Command, CommandDeleter>;
CommandPtr make_command();
CLI::App& app(Command& command);

/// Parses and runs. Usage errors print help text and return kExitUsage; runtime failures
/// write one JSON line {"error", "kind"} to `err` and return kExitRuntime.
int run(const std::vector<std::string>& args, Streams io);

} // namespace tsrl::cli
