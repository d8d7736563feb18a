#pragma once

#include <string>
#include <vector>

#include "cascade/config.hpp"
#include "cascade/engine.hpp"
#include "cascade/learn.hpp"
#include "cascade/metrics.hpp"

namespace cascade {

/// Derived, shared per-stage RNG streams. Every stream is a pure function
/// of (master_seed, stage tag, index), so stages can be re-run in any
/// order, alone or inside the full pipeline, with identical results.
Rng stage_rng(const ExperimentConfig& config, const std::string& stage, std::uint64_t index = 0);

/// Seed nodes chosen by the config's rule from this graph.
std::vector<NodeId> select_seeds(const ExperimentConfig& config, const SocialGraph& graph);

/// Identity string tying cascades to the graph they ran on.
std::string graph_ref_of(const ExperimentConfig& config);

/// Relative artifact paths used by the pipeline and the staged subcommands.
namespace artifact {
std::string graph();
std::string effective_config();
std::string cascade_log(const std::string& protocol, int replicate);
std::string summary_csv();
std::string curve_csv(const std::string& protocol);
std::string features_csv(const std::string& protocol);
std::string fit_subtrees(const std::string& protocol);
std::string model(const std::string& protocol, ModelKind kind);
std::string results_csv();
std::string manifest();
} // namespace artifact

struct StageOptions {
    int jobs = 1;
    bool quiet = false;
};

// Staged entry points; each reads its inputs from the config's output
// directory and writes its artifacts there, returning the relative paths
// it produced.
std::vector<std::string> stage_generate_graph(const ExperimentConfig& config,
                                              const StageOptions& opts);
std::vector<std::string> stage_simulate(const ExperimentConfig& config, const StageOptions& opts);
std::vector<std::string> stage_summarize(const ExperimentConfig& config,
                                         const StageOptions& opts);
std::vector<std::string> stage_sample_subtrees(const ExperimentConfig& config,
                                               const StageOptions& opts);
std::vector<std::string> stage_fit_models(const ExperimentConfig& config,
                                          const StageOptions& opts);
std::vector<std::string> stage_generate_synthetic(const ExperimentConfig& config,
                                                  const StageOptions& opts);
std::vector<std::string> stage_classify(const ExperimentConfig& config, const StageOptions& opts);

struct CalibrationReport {
    std::string protocol;
    double multiplier = 1.0;
    double measured_r = 0.0;
    double base_rate = 0.0;
};

/// Calibrates every configured protocol to the analysis target R and
/// writes a config copy with the scaled base rates.
std::vector<CalibrationReport> stage_calibrate(const ExperimentConfig& config,
                                               const StageOptions& opts);

/// Full pipeline: generate, simulate, summarize, sample, fit, classify,
/// then write the manifest (always last). Returns the manifest text.
std::string run_pipeline(const ExperimentConfig& config, const StageOptions& opts);

/// Content listing of the artifacts produced so far, sorted by path.
std::string manifest_text(const ExperimentConfig& config,
                          const std::vector<std::string>& relative_paths);

} // namespace cascade
