#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace xdjdl::cli {

// Exit codes shared by every subcommand.
inline constexpr int exit_ok = 0;
inline constexpr int exit_config = 2;  // bad config / bad arguments
inline constexpr int exit_io = 3;      // unreadable, unparsable or corrupt files
inline constexpr int exit_numeric = 4; // non-finite objective and friends

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed; // overrides the config seed of the subcommand
    std::string out_dir;               // prefix for relative paths in the config
};

int cmd_synth(const CommonArgs& args);
int cmd_preprocess(const CommonArgs& args);
int cmd_train(const CommonArgs& args);
int cmd_infer(const CommonArgs& args);
int cmd_eval(const CommonArgs& args);

// Shared by main() and tests: dispatch on subcommand name.
int run_command(const std::string& name, const CommonArgs& args);

} // namespace xdjdl::cli
