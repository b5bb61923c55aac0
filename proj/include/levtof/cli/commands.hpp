#pragma once

#include "levtof/cli/config.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace levtof::cli {

inline constexpr const char* toolkit_version = "0.1.0";

/// Inputs shared by every command: the parsed config plus the verbatim text
/// it came from (echoed into the output directory).
struct Invocation {
    RunConfig config;
    std::string config_text;
    std::string command;
};

/// Files a command wrote, relative to the output directory, in write order.
struct CommandResult {
    std::vector<std::string> files;
    std::vector<std::string> warnings;
    int exit_code = 0;
};

CommandResult cmd_simulate(const Invocation& inv);
CommandResult cmd_analyze(const Invocation& inv);
CommandResult cmd_sweep(const Invocation& inv);
CommandResult cmd_libration_center(const Invocation& inv);
CommandResult cmd_signal(const Invocation& inv);

/// Lowercase hex SHA-256 of a byte string / of a file's contents.
std::string sha256_hex(const std::string& bytes);
std::string sha256_file(const std::filesystem::path& path);

/// "{:.17g}" formatting used for every float in CSV output.
std::string format_float(double v);

}  // namespace levtof::cli
