#include <CLI11.hpp>

#include "xdjdl/cli.hpp"

int main(int argc, char** argv) {
    CLI::App app{"xdjdl: cross-domain joint dictionary learning for PPG-to-ECG reconstruction"};
    app.require_subcommand(1);

    xdjdl::cli::CommonArgs args;
    std::uint64_t seed_value = 0;
    bool seed_set = false;

    const auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", args.config_path, "run configuration (json)")->required();
        sub->add_option("--seed", seed_value, "override the configured seed")
            ->each([&](const std::string&) { seed_set = true; });
        sub->add_option("--out", args.out_dir, "directory prefix for relative paths");
    };
    for (const char* name : {"synth", "preprocess", "train", "infer", "eval"})
        add_common(app.add_subcommand(name));

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : xdjdl::cli::exit_config;
    }

    if (seed_set) args.seed = seed_value;
    return xdjdl::cli::run_command(app.get_subcommands().front()->get_name(), args);
}
