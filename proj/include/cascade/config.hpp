#pragma once

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/branching.hpp"
#include "cascade/graph.hpp"
#include "cascade/protocol.hpp"

namespace cascade {

/// Invalid or unreadable experiment configuration (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

struct SeedRule {
    enum class Kind { RandomK, TopDegreeK, Explicit };
    Kind kind = Kind::RandomK;
    int k = 10;
    std::vector<NodeId> explicit_ids;
};

struct AnalysisConfig {
    int subtree_d = kDefaultSubtreeDepth;
    std::size_t subtree_count_differentiate = kDefaultDifferentiationSamples;
    std::size_t subtree_count_fit = kDefaultFittingSamples;
    std::vector<ModelKind> model_kinds = {ModelKind::Baseline, ModelKind::Degree,
                                          ModelKind::ConditionalDegree};
    std::vector<std::string> tasks = {"adoption", "differentiate", "real_vs_synthetic"};
    std::size_t max_task_rows = 10000; // cap per class for classifier datasets
    double smoothing_alpha = kDefaultSmoothingAlpha;
    double calibration_target_r = 1.8;
    double calibration_tol = 0.1;
    int calibration_runs = 5;
    double calibration_horizon = 0.0; // 0: per-protocol growth-phase default
};

struct ExperimentConfig {
    GraphConfig graph;
    std::map<std::string, ProtocolSpec> protocols; // iteration order = name order
    SeedRule seeds;
    double horizon = 2419200.0; // 28 simulated days
    int replicates = 5;
    AnalysisConfig analysis;
    std::string output_dir = "out";
    std::uint64_t master_seed = 1;
};

/// Parses and validates a config file; optional seed override replaces
/// master_seed before anything is derived from it.
ExperimentConfig load_config(const std::string& path, const std::uint64_t* seed_override = nullptr,
                             const std::string* out_override = nullptr);

ExperimentConfig parse_config(const std::string& text, const std::uint64_t* seed_override = nullptr,
                              const std::string* out_override = nullptr);

/// All four shipped default protocols, default graph, 5 replicates.
ExperimentConfig default_config();

/// Canonical serialized form with every default made explicit; hashing this
/// is how artifacts are tied to their configuration.
std::string effective_config_text(const ExperimentConfig& config);

std::uint64_t config_hash(const ExperimentConfig& config);

} // namespace cascade
