// levtof: release-and-recapture TOF campaigns, analysis and libration-centre tools.
//
// Exit codes: 0 success, 2 config error, 3 numerical failure, 4 I/O error.

#include "levtof/cli/commands.hpp"
#include "levtof/errors.hpp"

#include <CLI11.hpp>
#include <fmt/format.h>

#include <cstdlib>
#include <fstream>
#include <functional>
#include <optional>
#include <iostream>
#include <sstream>

namespace {

using namespace levtof;
using namespace levtof::cli;

struct Flags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::uint64_t> trials;
    std::string out;
    std::string input;
};

std::string read_text(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read config " + path);
    std::ostringstream buffer;
    buffer << in.rdbuf();
    return buffer.str();
}

std::uint64_t parse_env_seed(const char* text) {
    try {
        std::size_t used = 0;
        const std::string s(text);
        if (s.empty() || s[0] == '-') throw std::invalid_argument("negative");
        const auto value = std::stoull(s, &used);
        if (used != s.size()) throw std::invalid_argument("trailing characters");
        return value;
    } catch (const std::exception&) {
        throw ConfigError(fmt::format("LEVTOF_SEED='{}' is not a non-negative integer", text));
    }
}

// Precedence: command-line flag, then environment, then config file.
Invocation build_invocation(const Flags& flags, const std::string& command) {
    Invocation inv;
    inv.command = command;
    inv.config_text = flags.config.empty() ? std::string() : read_text(flags.config);
    inv.config = parse_config(inv.config_text, flags.config.empty() ? "<defaults>" : flags.config);
    if (const char* env = std::getenv("LEVTOF_OUTPUT_DIR"); env && *env) inv.config.output_dir = env;
    if (const char* env = std::getenv("LEVTOF_SEED"); env && *env) inv.config.seed = parse_env_seed(env);
    if (flags.seed) inv.config.seed = *flags.seed;
    if (flags.trials) {
        if (*flags.trials < 1) throw ConfigError("--trials must be at least 1");
        inv.config.n_trials = *flags.trials;
    }
    if (!flags.out.empty()) inv.config.output_dir = flags.out;
    if (!flags.input.empty()) inv.config.analyze.input = flags.input;
    return inv;
}

int run(const std::function<CommandResult(const Invocation&)>& command, const Flags& flags,
        const std::string& name) {
    try {
        const Invocation inv = build_invocation(flags, name);
        const CommandResult result = command(inv);
        for (const auto& w : result.warnings) std::cerr << "warning: " << w << "\n";
        std::cout << fmt::format("{}: wrote {} files to {}\n", name, result.files.size(),
                                 inv.config.output_dir.string());
        return result.exit_code;
    } catch (const ConfigError& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const IoError& ex) {
        std::cerr << "I/O error: " << ex.what() << "\n";
        return 4;
    } catch (const NumericalError& ex) {
        std::cerr << "numerical failure: " << ex.what() << "\n";
        return 3;
    } catch (const std::invalid_argument& ex) {
        std::cerr << "config error: " << ex.what() << "\n";
        return 2;
    } catch (const std::exception& ex) {
        std::cerr << "error: " << ex.what() << "\n";
        return 4;
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Release-and-recapture time-of-flight toolkit for levitated nanoparticles"};
    app.set_version_flag("--version", std::string(toolkit_version));
    app.require_subcommand(1);

    Flags flags;
    const auto add_common = [&flags](CLI::App* sub) {
        sub->add_option("--config", flags.config, "YAML run configuration")->check(CLI::ExistingFile);
        sub->add_option("--seed", flags.seed, "Override the RNG seed");
        sub->add_option("--out", flags.out, "Output directory");
    };

    auto* simulate = app.add_subcommand("simulate", "Run a TOF campaign and write trials.csv");
    add_common(simulate);
    simulate->add_option("--trials", flags.trials, "Override the number of trials");

    auto* analyze = app.add_subcommand("analyze", "Fit a velocity distribution: summary.json + histogram.csv");
    add_common(analyze);
    analyze->add_option("--input", flags.input, "trials.csv or a CSV with a velocity_mps column");

    auto* sweep = app.add_subcommand("sweep", "Width versus n_z campaigns and the eps2*delta_omega fit");
    add_common(sweep);

    auto* libration = app.add_subcommand("libration-center", "Libration-centre offset versus asymmetry c/a");
    add_common(libration);

    auto* signal = app.add_subcommand("signal", "Synthesize, filter and demodulate recapture traces");
    add_common(signal);
    signal->add_option("--trials", flags.trials, "Override the number of trials");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForVersion& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    }

    if (*simulate) return run(cmd_simulate, flags, "simulate");
    if (*analyze) return run(cmd_analyze, flags, "analyze");
    if (*sweep) return run(cmd_sweep, flags, "sweep");
    if (*libration) return run(cmd_libration_center, flags, "libration-center");
    if (*signal) return run(cmd_signal, flags, "signal");
    return 2;
}
