#pragma once

#include <cstdint>
#include <optional>
#include <string>

namespace qhit {

inline constexpr const char* kVersion = "0.1.0";

// Exit codes shared by all subcommands.
inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitRuntime = 2;
inline constexpr int kExitUncertified = 3;

struct RunOptions {
    std::string config_path;
    std::optional<std::uint64_t> seed;       // overrides simulation.seed
    std::optional<std::string> out_dir;      // overrides output.directory
    int threads = 0;                         // 0 = hardware default
};

int run_validate(const RunOptions& opts);
int run_theory(const RunOptions& opts);
int run_simulate(const RunOptions& opts);
int run_pointprocess(const RunOptions& opts);
int run_blockcheck(const RunOptions& opts);
int run_entryratio(const RunOptions& opts);

}  // namespace qhit
