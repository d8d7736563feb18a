#include "cascade/pipeline.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "cascade/structure.hpp"
#include "cascade/util.hpp"

namespace cascade {

namespace fs = std::filesystem;

namespace {

std::uint64_t stage_seed(const ExperimentConfig& config, const std::string& stage,
                         std::uint64_t index) {
    return mix64(mix64(config.master_seed, fnv1a64(stage)), index);
}

GraphConfig effective_graph_config(const ExperimentConfig& config) {
    GraphConfig g = config.graph;
    if (g.rng_seed == 0) g.rng_seed = stage_seed(config, "graph", 0);
    return g;
}

fs::path out_path(const ExperimentConfig& config, const std::string& rel) {
    return fs::path(config.output_dir) / rel;
}

void write_file_atomic(const fs::path& path, const std::string& content) {
    fs::create_directories(path.parent_path());
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot open for writing: " + tmp.string());
        out << content;
        if (!out) throw std::runtime_error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot read artifact: " + path.string());
    std::ostringstream buf;
    buf << in.rdbuf();
    return buf.str();
}

void note(const StageOptions& opts, const std::string& message) {
    if (!opts.quiet) std::cerr << message << "\n";
}

SocialGraph load_graph_artifact(const ExperimentConfig& config, const char* stage) {
    const fs::path p = out_path(config, artifact::graph());
    if (!fs::exists(p))
        throw std::runtime_error(std::string(stage) +
                                 ": missing graph artifact (run generate-graph first): " +
                                 p.string());
    return load_graph(p.string());
}

Cascade load_cascade_artifact(const ExperimentConfig& config, const std::string& protocol,
                              int replicate, const char* stage) {
    const fs::path p = out_path(config, artifact::cascade_log(protocol, replicate));
    if (!fs::exists(p))
        throw std::runtime_error(std::string(stage) +
                                 ": missing cascade log (run simulate first): " + p.string());
    return load_cascade(p.string());
}

std::vector<CascadeTree> load_trees(const ExperimentConfig& config, const std::string& protocol,
                                    const char* stage) {
    std::vector<CascadeTree> trees;
    trees.reserve(static_cast<std::size_t>(config.replicates));
    for (int r = 0; r < config.replicates; ++r)
        trees.push_back(build_tree(load_cascade_artifact(config, protocol, r, stage)));
    return trees;
}

std::vector<FeatureVector> capped(std::vector<FeatureVector> rows, std::size_t cap) {
    if (cap > 0 && rows.size() > cap) rows.resize(cap);
    return rows;
}

// Bare task names enable every protocol (pair); qualified entries pick one.
bool task_enabled(const std::vector<std::string>& tasks, const std::string& head,
                  const std::string& qualifier) {
    for (const std::string& t : tasks) {
        if (t == head) return true;
        if (t == head + ":" + qualifier) return true;
    }
    return false;
}

bool pair_enabled(const std::vector<std::string>& tasks, const std::string& a,
                  const std::string& b) {
    return task_enabled(tasks, "differentiate", a + "|" + b) ||
           task_enabled(tasks, "differentiate", b + "|" + a);
}

} // namespace

namespace artifact {
std::string graph() { return "graph.txt"; }
std::string effective_config() { return "effective_config.json"; }
std::string cascade_log(const std::string& protocol, int replicate) {
    return "cascades/" + protocol + "_r" + std::to_string(replicate) + ".log";
}
std::string summary_csv() { return "summary.csv"; }
std::string curve_csv(const std::string& protocol) {
    return "curves/" + protocol + "_curve.csv";
}
std::string features_csv(const std::string& protocol) {
    return "features/" + protocol + "_features.csv";
}
std::string fit_subtrees(const std::string& protocol) {
    return "subtrees/" + protocol + "_fit.txt";
}
std::string model(const std::string& protocol, ModelKind kind) {
    return "models/" + protocol + "_" + model_kind_name(kind) + ".model";
}
std::string results_csv() { return "results.csv"; }
std::string manifest() { return "manifest.txt"; }
} // namespace artifact

Rng stage_rng(const ExperimentConfig& config, const std::string& stage, std::uint64_t index) {
    return Rng(stage_seed(config, stage, index));
}

std::string graph_ref_of(const ExperimentConfig& config) {
    return to_hex(config_hash(config)) + ":" +
           std::to_string(effective_graph_config(config).rng_seed);
}

std::vector<NodeId> select_seeds(const ExperimentConfig& config, const SocialGraph& graph) {
    const auto n = static_cast<NodeId>(graph.size());
    switch (config.seeds.kind) {
        case SeedRule::Kind::Explicit: {
            for (NodeId id : config.seeds.explicit_ids)
                if (id < 0 || id >= n) throw ConfigError("seeds.ids: unknown node id");
            return config.seeds.explicit_ids;
        }
        case SeedRule::Kind::TopDegreeK: {
            auto top = graph.top_degree_nodes(1.0);
            top.resize(std::min<std::size_t>(top.size(), static_cast<std::size_t>(config.seeds.k)));
            return top;
        }
        case SeedRule::Kind::RandomK: {
            Rng rng = stage_rng(config, "seeds");
            const auto k = std::min<std::size_t>(static_cast<std::size_t>(config.seeds.k),
                                                 graph.size());
            std::vector<NodeId> pool(graph.size());
            for (NodeId i = 0; i < n; ++i) pool[i] = i;
            for (std::size_t i = 0; i < k; ++i) {
                const std::size_t j = i + rng.below(pool.size() - i);
                std::swap(pool[i], pool[j]);
            }
            pool.resize(k);
            return pool;
        }
    }
    throw ConfigError("bad seed rule");
}

std::vector<std::string> stage_generate_graph(const ExperimentConfig& config,
                                              const StageOptions& opts) {
    note(opts, "[generate-graph] n=" + std::to_string(config.graph.n));
    const SocialGraph graph = generate_graph(effective_graph_config(config));
    std::ostringstream buf;
    graph.write(buf);
    write_file_atomic(out_path(config, artifact::graph()), buf.str());
    write_file_atomic(out_path(config, artifact::effective_config()),
                      effective_config_text(config));
    return {artifact::graph(), artifact::effective_config()};
}

std::vector<std::string> stage_simulate(const ExperimentConfig& config,
                                        const StageOptions& opts) {
    const SocialGraph graph = load_graph_artifact(config, "simulate");
    const std::vector<NodeId> seeds = select_seeds(config, graph);
    const std::string graph_ref = graph_ref_of(config);

    std::vector<std::pair<std::string, int>> jobs_list;
    for (const auto& [name, spec] : config.protocols)
        for (int r = 0; r < config.replicates; ++r) jobs_list.emplace_back(name, r);

    std::vector<std::string> written(jobs_list.size());
    parallel_for(jobs_list.size(), opts.jobs, [&](std::size_t i) {
        const auto& [name, r] = jobs_list[i];
        const std::uint64_t seed = stage_seed(config, "sim:" + name, static_cast<std::uint64_t>(r));
        const Cascade cascade = simulate(graph, config.protocols.at(name), seeds, config.horizon,
                                         Rng(seed), graph_ref, seed);
        std::ostringstream buf;
        write_cascade(cascade, buf);
        const std::string rel = artifact::cascade_log(name, r);
        write_file_atomic(out_path(config, rel), buf.str());
        written[i] = rel;
        note(opts, "[simulate] " + name + " r" + std::to_string(r) + ": " +
                       std::to_string(cascade.events.size()) + " events");
    });
    return written;
}

std::vector<std::string> stage_summarize(const ExperimentConfig& config,
                                         const StageOptions& opts) {
    const SocialGraph graph = load_graph_artifact(config, "summarize");
    std::ostringstream summary;
    summary << summary_csv_header() << "\n";
    std::vector<std::string> written;
    for (const auto& [name, spec] : config.protocols) {
        ExposureCurve merged;
        for (int r = 0; r < config.replicates; ++r) {
            const Cascade cascade = load_cascade_artifact(config, name, r, "summarize");
            const CascadeTree tree = build_tree(cascade);
            summary << summary_csv_row(name, r, summarize(cascade, tree, graph)) << "\n";
            merged.merge(exposure_curve(cascade));
        }
        const std::string rel = artifact::curve_csv(name);
        write_file_atomic(out_path(config, rel), exposure_curve_csv(merged));
        written.push_back(rel);
        note(opts, "[summarize] " + name + " done");
    }
    write_file_atomic(out_path(config, artifact::summary_csv()), summary.str());
    written.push_back(artifact::summary_csv());
    return written;
}

std::vector<std::string> stage_sample_subtrees(const ExperimentConfig& config,
                                               const StageOptions& opts) {
    std::vector<std::string> written;
    for (const auto& [name, spec] : config.protocols) {
        const std::vector<CascadeTree> trees = load_trees(config, name, "sample-subtrees");
        std::vector<const CascadeTree*> ptrs;
        for (const auto& t : trees) ptrs.push_back(&t);

        Rng diff_rng = stage_rng(config, "subtrees:diff:" + name);
        const auto diff = sample_subtrees(ptrs, config.analysis.subtree_count_differentiate,
                                          config.analysis.subtree_d, diff_rng);
        const std::string feat_rel = artifact::features_csv(name);
        write_file_atomic(out_path(config, feat_rel), features_csv(features_of(diff)));
        written.push_back(feat_rel);

        Rng fit_rng = stage_rng(config, "subtrees:fit:" + name);
        const auto fit_sample = sample_subtrees(ptrs, config.analysis.subtree_count_fit,
                                                config.analysis.subtree_d, fit_rng);
        std::ostringstream buf;
        write_subtrees(fit_sample, buf);
        const std::string fit_rel = artifact::fit_subtrees(name);
        write_file_atomic(out_path(config, fit_rel), buf.str());
        written.push_back(fit_rel);
        note(opts, "[sample-subtrees] " + name + ": " + std::to_string(diff.size()) + "+" +
                       std::to_string(fit_sample.size()));
    }
    return written;
}

std::vector<std::string> stage_fit_models(const ExperimentConfig& config,
                                          const StageOptions& opts) {
    std::vector<std::string> written;
    for (const auto& [name, spec] : config.protocols) {
        const fs::path in = out_path(config, artifact::fit_subtrees(name));
        if (!fs::exists(in))
            throw std::runtime_error("fit-model: missing subtree sample (run sample-subtrees "
                                     "first): " +
                                     in.string());
        const auto sample = load_subtrees(in.string());
        for (ModelKind kind : config.analysis.model_kinds) {
            const BranchingModel model = fit(kind, sample, config.analysis.smoothing_alpha);
            std::ostringstream buf;
            write_model(model, buf);
            const std::string rel = artifact::model(name, kind);
            write_file_atomic(out_path(config, rel), buf.str());
            written.push_back(rel);
        }
        note(opts, "[fit-model] " + name + " done");
    }
    return written;
}

std::vector<std::string> stage_generate_synthetic(const ExperimentConfig& config,
                                                  const StageOptions& opts) {
    std::vector<std::string> written;
    for (const auto& [name, spec] : config.protocols) {
        for (ModelKind kind : config.analysis.model_kinds) {
            const fs::path in = out_path(config, artifact::model(name, kind));
            if (!fs::exists(in))
                throw std::runtime_error(
                    "generate-synthetic: missing model (run fit-model first): " + in.string());
            const BranchingModel model = load_model(in.string());
            Rng rng = stage_rng(config, "synthetic:" + name + ":" + model_kind_name(kind));
            const auto sample = generate(model, config.analysis.subtree_count_differentiate,
                                         config.analysis.subtree_d, rng);
            std::ostringstream buf;
            write_subtrees(sample, buf);
            const std::string rel = "synthetic/" + name + "_" + model_kind_name(kind) + ".txt";
            write_file_atomic(out_path(config, rel), buf.str());
            written.push_back(rel);
        }
        note(opts, "[generate-synthetic] " + name + " done");
    }
    return written;
}

std::vector<std::string> stage_classify(const ExperimentConfig& config,
                                        const StageOptions& opts) {
    const SocialGraph graph = load_graph_artifact(config, "classify");
    const std::string hash_hex = to_hex(config_hash(config));
    std::ostringstream results;
    results << "task,config_hash,auc,n_train,n_test,seed\n";
    auto emit = [&](const std::string& task, const TaskResult& res, std::uint64_t seed) {
        results << task << ',' << hash_hex << ',' << format_double(res.auc) << ',' << res.n_train
                << ',' << res.n_test << ',' << seed << "\n";
        note(opts, "[classify] " + task + ": auc=" + format_double(res.auc));
    };

    const auto& tasks = config.analysis.tasks;
    auto starts_with = [&](const std::string& head) {
        return std::any_of(tasks.begin(), tasks.end(), [&](const std::string& t) {
            return t == head || t.rfind(head + ":", 0) == 0;
        });
    };
    const bool want_diff = starts_with("differentiate");
    const bool want_rvs = starts_with("real_vs_synthetic");

    for (const auto& [name, spec] : config.protocols) {
        if (!task_enabled(tasks, "adoption", name)) continue;
        const Cascade cascade = load_cascade_artifact(config, name, 0, "classify");
        const CascadeTree tree = build_tree(cascade);
        const std::uint64_t seed = stage_seed(config, "task:adoption:" + name, 0);
        Rng rng(seed);
        emit("adoption:" + name,
             adoption_task(cascade, tree, graph, rng, config.analysis.max_task_rows, opts.jobs),
             seed);
    }

    {
        if (want_diff) {
            // Feature corpora per protocol, sampled once and shared by pairs.
            std::map<std::string, std::vector<CascadeTree>> trees;
            for (const auto& [name, spec] : config.protocols)
                trees.emplace(name, load_trees(config, name, "classify"));
            std::map<std::string, std::vector<FeatureVector>> corpus;
            for (const auto& [name, spec] : config.protocols) {
                std::vector<const CascadeTree*> ptrs;
                for (const auto& t : trees.at(name)) ptrs.push_back(&t);
                Rng rng = stage_rng(config, "task:diff-sample:" + name);
                corpus.emplace(name,
                               capped(features_of(sample_subtrees(
                                          ptrs, config.analysis.subtree_count_differentiate,
                                          config.analysis.subtree_d, rng)),
                                      config.analysis.max_task_rows));
            }
            for (auto a = config.protocols.begin(); a != config.protocols.end(); ++a) {
                for (auto b = a; b != config.protocols.end(); ++b) {
                    const std::string& na = a->first;
                    const std::string& nb = b->first;
                    if (!pair_enabled(tasks, na, nb)) continue;
                    const std::string task = "differentiate:" + na + "|" + nb;
                    const std::uint64_t seed = stage_seed(config, "task:" + task, 0);
                    Rng rng(seed);
                    if (na == nb) {
                        // Same-protocol pair: independent replicate halves.
                        if (config.replicates < 2) continue;
                        std::vector<const CascadeTree*> even, odd;
                        const auto& ts = trees.at(na);
                        for (std::size_t i = 0; i < ts.size(); ++i)
                            (i % 2 == 0 ? even : odd).push_back(&ts[i]);
                        Rng ra = stage_rng(config, "task:diff-self-a:" + na);
                        Rng rb = stage_rng(config, "task:diff-self-b:" + na);
                        const auto fa = capped(
                            features_of(sample_subtrees(
                                even, config.analysis.subtree_count_differentiate,
                                config.analysis.subtree_d, ra)),
                            config.analysis.max_task_rows);
                        const auto fb = capped(
                            features_of(sample_subtrees(
                                odd, config.analysis.subtree_count_differentiate,
                                config.analysis.subtree_d, rb)),
                            config.analysis.max_task_rows);
                        emit(task, differentiate_task(fa, fb, rng, opts.jobs), seed);
                    } else {
                        emit(task,
                             differentiate_task(corpus.at(na), corpus.at(nb), rng, opts.jobs),
                             seed);
                    }
                }
            }
        }

        if (want_rvs) {
            for (const auto& [name, spec] : config.protocols) {
                if (!task_enabled(tasks, "real_vs_synthetic", name)) continue;
                const fs::path in = out_path(config, artifact::fit_subtrees(name));
                if (!fs::exists(in))
                    throw std::runtime_error(
                        "classify: missing subtree sample (run sample-subtrees first): " +
                        in.string());
                auto real = load_subtrees(in.string());
                if (config.analysis.max_task_rows > 0 &&
                    real.size() > config.analysis.max_task_rows)
                    real.resize(config.analysis.max_task_rows);
                for (ModelKind kind : config.analysis.model_kinds) {
                    const fs::path mp = out_path(config, artifact::model(name, kind));
                    if (!fs::exists(mp))
                        throw std::runtime_error(
                            "classify: missing model (run fit-model first): " + mp.string());
                    const BranchingModel model = load_model(mp.string());
                    const std::string task =
                        "real_vs_synthetic:" + name + ":" + model_kind_name(kind);
                    const std::uint64_t seed = stage_seed(config, "task:" + task, 0);
                    Rng rng(seed);
                    emit(task, real_vs_synthetic_task(real, model, rng, opts.jobs), seed);
                }
            }
        }
    }

    write_file_atomic(out_path(config, artifact::results_csv()), results.str());
    return {artifact::results_csv()};
}

std::vector<CalibrationReport> stage_calibrate(const ExperimentConfig& config,
                                               const StageOptions& opts) {
    const SocialGraph graph = load_graph_artifact(config, "calibrate");
    const std::vector<NodeId> seeds = select_seeds(config, graph);
    std::vector<CalibrationReport> reports;
    ExperimentConfig calibrated = config;
    for (const auto& [name, spec] : config.protocols) {
        Rng rng = stage_rng(config, "calibrate:" + name);
        const double horizon = config.analysis.calibration_horizon > 0
                                   ? config.analysis.calibration_horizon
                                   : calibration_horizon(spec);
        const CalibrationResult res = calibrate_reproduction(
            graph, spec, seeds, config.analysis.calibration_target_r,
            config.analysis.calibration_tol, config.analysis.calibration_runs, horizon, rng,
            opts.jobs);
        calibrated.protocols.at(name) = res.spec;
        reports.push_back({name, res.multiplier, res.measured_r,
                           response_of(res.spec).base_rate});
        note(opts, "[calibrate] " + name + ": multiplier=" + format_double(res.multiplier) +
                       " R=" + format_double(res.measured_r));
    }
    write_file_atomic(out_path(config, "calibrated_config.json"),
                      effective_config_text(calibrated));
    return reports;
}

std::string manifest_text(const ExperimentConfig& config,
                          const std::vector<std::string>& relative_paths) {
    std::vector<std::string> paths = relative_paths;
    std::sort(paths.begin(), paths.end());
    paths.erase(std::unique(paths.begin(), paths.end()), paths.end());
    std::ostringstream out;
    out << "config " << to_hex(config_hash(config)) << "\n";
    out << "master_seed " << config.master_seed << "\n";
    for (const auto& rel : paths) {
        const std::string bytes = read_file(out_path(config, rel));
        out << "artifact " << to_hex(fnv1a64(bytes)) << ' ' << bytes.size() << ' ' << rel
            << "\n";
    }
    return out.str();
}

std::string run_pipeline(const ExperimentConfig& config, const StageOptions& opts) {
    std::vector<std::string> artifacts;
    auto take = [&](std::vector<std::string> produced) {
        artifacts.insert(artifacts.end(), produced.begin(), produced.end());
    };
    take(stage_generate_graph(config, opts));
    take(stage_simulate(config, opts));
    take(stage_summarize(config, opts));
    take(stage_sample_subtrees(config, opts));
    take(stage_fit_models(config, opts));
    take(stage_classify(config, opts));
    const std::string manifest = manifest_text(config, artifacts);
    write_file_atomic(out_path(config, artifact::manifest()), manifest);
    return manifest;
}

} // namespace cascade
