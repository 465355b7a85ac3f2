#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "qhit/block.hpp"
#include "qhit/hitting.hpp"
#include "qhit/interval_system.hpp"
#include "qhit/noise.hpp"
#include "qhit/target_analysis.hpp"

namespace qhit {

struct AnalysisParams {
    std::size_t ell_max = 8;
    std::size_t period_horizon = 8;
    std::size_t word_horizon = 12;
};

struct BlockcheckParams {
    bool enabled = false;
    std::size_t Delta = 2;
    std::size_t n_max = 8;
};

struct OutputParams {
    std::string directory = "out";
    std::vector<std::string> formats{"csv", "json"};
};

// Declarative experiment description loaded from a JSON document. Rationals
// are written as "p/q" strings so exactness survives serialization.
struct ExperimentConfig {
    MapFamily family;
    NoiseModel noise;
    TargetSpec target;
    AnalysisParams analysis;
    ExperimentPlan plan;
    BlockcheckParams blockcheck;
    OutputParams output;
    std::uint64_t config_hash = 0;  // FNV-1a of the raw document bytes
};

ExperimentConfig load_config(const std::string& path);
ExperimentConfig parse_config(const std::string& json_text);

// Static checks: family validity, target placement (interior point with an
// unambiguous Jacobian for every map), schedule summability. Throws
// ValidationError with an aggregated message on failure.
FamilyReport validate_config(const ExperimentConfig& cfg);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace qhit
