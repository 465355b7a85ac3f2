#include <CLI11.hpp>

#include "qhit/harness.hpp"

int main(int argc, char** argv) {
    CLI::App app{"simulator and statistics for hitting laws of random interval maps"};
    app.require_subcommand(1);

    qhit::RunOptions opts;
    std::uint64_t seed = 0;
    std::string out_dir;

    const auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "experiment config (JSON)")
            ->required()
            ->check(CLI::ExistingFile);
        cmd->add_option("--seed", seed, "override the config seed")
            ->each([&](const std::string& v) { opts.seed = std::stoull(v); });
        cmd->add_option("--out", out_dir, "override the output directory")
            ->each([&](const std::string& v) { opts.out_dir = v; });
        cmd->add_option("--threads", opts.threads, "worker threads (0 = hardware default)");
    };

    int (*entry)(const qhit::RunOptions&) = nullptr;
    const std::pair<const char*, int (*)(const qhit::RunOptions&)> commands[] = {
        {"validate", qhit::run_validate},   {"theory", qhit::run_theory},
        {"simulate", qhit::run_simulate},   {"pointprocess", qhit::run_pointprocess},
        {"blockcheck", qhit::run_blockcheck}, {"entryratio", qhit::run_entryratio},
    };
    for (const auto& [name, fn] : commands) {
        CLI::App* cmd = app.add_subcommand(name);
        add_common(cmd);
        cmd->callback([&entry, fn = fn] { entry = fn; });
    }

    CLI11_PARSE(app, argc, argv);
    return entry ? entry(opts) : qhit::kExitValidation;
}
