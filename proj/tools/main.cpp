#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "cascade/config.hpp"
#include "cascade/pipeline.hpp"
#include "cascade/util.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::string out_dir;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int jobs = 0;
    bool quiet = false;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "experiment config file (JSON)")
        ->required();
    cmd->add_option("--out", args.out_dir, "output directory (overrides config)");
    cmd->add_option("--seed", args.seed, "master seed override")
        ->each([&args](const std::string&) { args.seed_set = true; });
    cmd->add_option("--jobs", args.jobs, "worker threads (default: JOBS env or hardware)");
    cmd->add_flag("--quiet", args.quiet, "suppress progress output");
}

cascade::ExperimentConfig load(const CommonArgs& args) {
    const std::uint64_t* seed = args.seed_set ? &args.seed : nullptr;
    const std::string* out = args.out_dir.empty() ? nullptr : &args.out_dir;
    return cascade::load_config(args.config_path, seed, out);
}

cascade::StageOptions options_of(const CommonArgs& args) {
    cascade::StageOptions opts;
    opts.jobs = cascade::effective_jobs(args.jobs);
    opts.quiet = args.quiet;
    return opts;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Discrete-event simulator and analysis toolkit for information-cascade "
                 "diffusion protocols on synthetic social networks"};
    app.require_subcommand(1);

    struct Sub {
        const char* name;
        const char* help;
    };
    const Sub stages[] = {
        {"generate-graph", "generate the synthetic social graph"},
        {"simulate", "run the configured cascades (needs generate-graph)"},
        {"summarize", "cascade summary CSV and exposure curves (needs simulate)"},
        {"sample-subtrees", "sample subtrees and write feature matrices (needs simulate)"},
        {"fit-model", "fit branching models to sampled subtrees (needs sample-subtrees)"},
        {"generate-synthetic", "generate synthetic subtrees from fitted models"},
        {"classify", "run the configured prediction tasks (needs prior stages)"},
        {"calibrate", "calibrate each protocol's base rate to the target reproduction number"},
        {"run", "full pipeline: generate, simulate, analyze, fit, classify, manifest"},
    };
    std::vector<std::pair<CLI::App*, CommonArgs>> cmds;
    cmds.reserve(std::size(stages));
    for (const Sub& s : stages) {
        cmds.emplace_back(app.add_subcommand(s.name, s.help), CommonArgs{});
        add_common(cmds.back().first, cmds.back().second);
    }

    CLI11_PARSE(app, argc, argv);

    for (auto& [cmd, args] : cmds) {
        if (!cmd->parsed()) continue;
        const std::string name = cmd->get_name();
        try {
            const cascade::ExperimentConfig config = load(args);
            const cascade::StageOptions opts = options_of(args);
            if (name == "generate-graph") {
                cascade::stage_generate_graph(config, opts);
            } else if (name == "simulate") {
                cascade::stage_simulate(config, opts);
            } else if (name == "summarize") {
                cascade::stage_summarize(config, opts);
            } else if (name == "sample-subtrees") {
                cascade::stage_sample_subtrees(config, opts);
            } else if (name == "fit-model") {
                cascade::stage_fit_models(config, opts);
            } else if (name == "generate-synthetic") {
                cascade::stage_generate_synthetic(config, opts);
            } else if (name == "classify") {
                cascade::stage_classify(config, opts);
            } else if (name == "calibrate") {
                for (const auto& rep : cascade::stage_calibrate(config, opts))
                    std::cout << rep.protocol << " multiplier=" << rep.multiplier
                              << " base_rate=" << rep.base_rate << " R=" << rep.measured_r
                              << "\n";
            } else if (name == "run") {
                cascade::run_pipeline(config, opts);
                if (!opts.quiet)
                    std::cerr << "[run] wrote " << config.output_dir << "/"
                              << cascade::artifact::manifest() << "\n";
            }
        } catch (const cascade::ConfigError& e) {
            std::cerr << "config error: " << e.what() << "\n";
            return 2;
        } catch (const std::exception& e) {
            std::cerr << name << " failed: " << e.what() << "\n";
            return 3;
        }
        return 0;
    }
    return 0;
}
