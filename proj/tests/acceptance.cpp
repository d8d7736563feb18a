// Acceptance suite: end-to-end checks of the shipped defaults, one
// pass/fail line per criterion. Exits with the number of failures.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <map>
#include <span>
#include <sstream>
#include <string>
#include <unistd.h>
#include <vector>

#include "cascade/branching.hpp"
#include "cascade/config.hpp"
#include "cascade/engine.hpp"
#include "cascade/learn.hpp"
#include "cascade/metrics.hpp"
#include "cascade/pipeline.hpp"
#include "cascade/structure.hpp"
#include "cascade/util.hpp"

using namespace cascade;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double now_seconds() {
    using clock = std::chrono::steady_clock;
    return std::chrono::duration<double>(clock::now().time_since_epoch()).count();
}

int failures = 0;
int executed = 0;
std::string only_filter; // comma list of criterion ids, empty = all

bool selected(int id) {
    if (only_filter.empty()) return true;
    std::stringstream ss(only_filter);
    std::string tok;
    while (std::getline(ss, tok, ','))
        if (std::atoi(tok.c_str()) == id) return true;
    return false;
}

void report(int id, const std::string& name, const Outcome& outcome, double seconds) {
    std::printf("[%s] criterion %2d (%6.1fs) %s: %s\n", outcome.pass ? "PASS" : "FAIL", id,
                seconds, name.c_str(), outcome.detail.c_str());
    std::fflush(stdout);
    ++executed;
    if (!outcome.pass) ++failures;
}

template <typename Fn>
void run(int id, const std::string& name, Fn&& fn) {
    if (!selected(id)) return;
    const double t0 = now_seconds();
    Outcome outcome;
    try {
        outcome = fn();
    } catch (const std::exception& e) {
        outcome.pass = false;
        outcome.detail = std::string("exception: ") + e.what();
    }
    report(id, name, outcome, now_seconds() - t0);
}

std::string fmt(double v) { return format_sig(v, 4); }

// ---------------------------------------------------------------------------
// Shared fixture: the default 50k graph plus the 4 x 5 default-horizon runs.

struct Fixture {
    ExperimentConfig config;
    SocialGraph graph;
    std::vector<NodeId> seeds;
    std::vector<std::string> protocol_names;
    std::map<std::string, std::vector<CascadeTree>> trees;
    std::map<std::string, std::vector<CascadeSummary>> summaries;
    std::map<std::string, ExposureCurve> curves;
    double build_seconds = 0;
};

Fixture build_fixture() {
    Fixture f;
    const double t0 = now_seconds();
    f.config = default_config();
    GraphConfig gc = f.config.graph;
    gc.rng_seed = 4242;
    f.graph = generate_graph(gc);

    Rng seed_rng(777);
    std::vector<NodeId> pool(f.graph.size());
    for (std::size_t i = 0; i < pool.size(); ++i) pool[i] = static_cast<NodeId>(i);
    for (int i = 0; i < f.config.seeds.k; ++i) {
        const std::size_t j = i + seed_rng.below(pool.size() - i);
        std::swap(pool[i], pool[j]);
    }
    pool.resize(static_cast<std::size_t>(f.config.seeds.k));
    f.seeds = pool;

    for (const auto& [name, spec] : f.config.protocols) {
        f.protocol_names.push_back(name);
        auto& trees = f.trees[name];
        auto& summaries = f.summaries[name];
        auto& curve = f.curves[name];
        for (int r = 0; r < f.config.replicates; ++r) {
            const Cascade cascade = simulate(f.graph, spec, f.seeds, f.config.horizon,
                                             Rng(mix64(91, fnv1a64(name)) + r));
            CascadeTree tree = build_tree(cascade);
            summaries.push_back(summarize(cascade, tree, f.graph));
            curve.merge(exposure_curve(cascade));
            trees.push_back(std::move(tree));
        }
    }
    f.build_seconds = now_seconds() - t0;
    return f;
}

double mean_over(const std::vector<CascadeSummary>& summaries,
                 const std::function<double(const CascadeSummary&)>& get) {
    double s = 0;
    for (const auto& x : summaries) s += get(x);
    return s / static_cast<double>(summaries.size());
}

std::vector<const CascadeTree*> tree_ptrs(const std::vector<CascadeTree>& trees) {
    std::vector<const CascadeTree*> out;
    out.reserve(trees.size());
    for (const auto& t : trees) out.push_back(&t);
    return out;
}

} // namespace

// ---------------------------------------------------------------------------

int main(int argc, char** argv) {
    if (argc > 1) only_filter = argv[1]; // e.g. "3,4,5" to run a subset
    std::printf("acceptance: building shared fixture (default 50k graph, 4 protocols x 5 "
                "replicates at the 28-day horizon)\n");
    std::fflush(stdout);
    Fixture f = build_fixture();
    std::printf("acceptance: fixture ready in %.1fs\n", f.build_seconds);
    std::fflush(stdout);

    // 1. Reproduction-number oracle on random trees.
    run(1, "reproduction-number oracle", [&] {
        Rng rng(2026);
        for (int trial = 0; trial < 50; ++trial) {
            const int n = 2 + static_cast<int>(rng.below(49));
            std::vector<NodeId> ids(n);
            std::vector<double> times(n);
            std::vector<CascadeTree::Index> parents(n);
            std::vector<int> child_count(n, 0);
            for (int i = 0; i < n; ++i) {
                ids[i] = i;
                times[i] = i;
                parents[i] = i == 0 ? -1 : static_cast<CascadeTree::Index>(rng.below(i));
                if (i > 0) ++child_count[parents[i]];
            }
            std::int64_t internal = 0, children = 0;
            for (int c : child_count) {
                if (c > 0) {
                    ++internal;
                    children += c;
                }
            }
            const CascadeTree tree = CascadeTree::from_parents(ids, times, parents);
            const double want = static_cast<double>(children) / static_cast<double>(internal);
            if (reproduction_number(tree) != want)
                return Outcome{false, "mismatch on trial " + std::to_string(trial)};
        }
        return Outcome{true, "50 random trees match brute-force child counting exactly"};
    });

    // 2. Constant-R calibration of all four default protocols.
    run(2, "constant-R calibration to 1.8 +/- 0.1", [&] {
        std::string detail;
        for (const auto& [name, spec] : f.config.protocols) {
            const CalibrationResult res =
                calibrate_reproduction(f.graph, spec, f.seeds, 1.8, 0.1, 5,
                                       calibration_horizon(spec), Rng(mix64(17, fnv1a64(name))));
            if (std::abs(res.measured_r - 1.8) > 0.1)
                return Outcome{false, name + " measured R=" + fmt(res.measured_r)};
            detail += name + " R=" + fmt(res.measured_r) + " ";
        }
        return Outcome{true, detail};
    });

    // 3. Speed ordering in every replicate (fixture simulation time is part
    // of this criterion's work; it is reported above).
    run(3, "speed ordering tc < pc < vol < nom", [&] {
        for (int r = 0; r < f.config.replicates; ++r) {
            const double tc = *f.summaries.at("transient_copy")[r].mean_adoption_delay;
            const double pc = *f.summaries.at("persistent_copy")[r].mean_adoption_delay;
            const double vol = *f.summaries.at("volunteer")[r].mean_adoption_delay;
            const double nom = *f.summaries.at("nomination")[r].mean_adoption_delay;
            if (!(tc < pc && pc < vol && vol < nom))
                return Outcome{false, "replicate " + std::to_string(r) + ": " + fmt(tc) + ", " +
                                          fmt(pc) + ", " + fmt(vol) + ", " + fmt(nom)};
        }
        return Outcome{true, "ordering holds in all 5 replicates (fixture sims " +
                                 fmt(f.build_seconds) + "s)"};
    });

    // 4. Hub-share ordering: copies at least twice nomination/volunteer.
    run(4, "hub share: copy >= 2x nomination/volunteer", [&] {
        auto share = [&](const std::string& name) {
            return mean_over(f.summaries.at(name),
                             [](const CascadeSummary& s) { return s.top1pct_share; });
        };
        const double tc = share("transient_copy"), pc = share("persistent_copy");
        const double nom = share("nomination"), vol = share("volunteer");
        const double copy_min = std::min(tc, pc);
        const double other_max = std::max(nom, vol);
        const bool pass = copy_min >= 2.0 * other_max;
        return Outcome{pass, "tc=" + fmt(tc) + " pc=" + fmt(pc) + " nom=" + fmt(nom) +
                                 " vol=" + fmt(vol)};
    });

    // 5. Complex-diffusion direction: p2 vs p1, two-proportion z at 95%.
    run(5, "exposure-curve direction per protocol", [&] {
        std::string detail;
        for (const auto& name : f.protocol_names) {
            const ExposureCurve& curve = f.curves.at(name);
            if (!curve.points.count(1) || !curve.points.count(2))
                return Outcome{false, name + ": missing k=1 or k=2"};
            const auto& a = curve.points.at(1);
            const auto& b = curve.points.at(2);
            if (a.n_at_risk < 1000 || b.n_at_risk < 1000)
                return Outcome{false, name + ": n_at_risk(1)=" + std::to_string(a.n_at_risk) +
                                          " n_at_risk(2)=" + std::to_string(b.n_at_risk)};
            const double se = std::sqrt(a.p * (1 - a.p) / static_cast<double>(a.n_at_risk) +
                                        b.p * (1 - b.p) / static_cast<double>(b.n_at_risk));
            const double z = (b.p - a.p) / se;
            const bool expect_up = name == "persistent_copy" || name == "volunteer";
            if (expect_up && z <= 1.96)
                return Outcome{false, name + ": p1=" + fmt(a.p) + " p2=" + fmt(b.p) +
                                          " z=" + fmt(z) + " (wanted p2 > p1)"};
            if (!expect_up && z >= -1.96)
                return Outcome{false, name + ": p1=" + fmt(a.p) + " p2=" + fmt(b.p) +
                                          " z=" + fmt(z) + " (wanted p2 < p1)"};
            detail += name + " z=" + fmt(z) + " ";
        }
        return Outcome{true, detail};
    });

    // 6. Transient copy spreads over the weakest ties.
    run(6, "mean mutual friends minimal for transient copy", [&] {
        std::map<std::string, double> mm;
        for (const auto& name : f.protocol_names)
            mm[name] = mean_over(f.summaries.at(name), [](const CascadeSummary& s) {
                return s.mean_mutual_friends.value_or(0.0);
            });
        const double tc = mm.at("transient_copy");
        std::string detail;
        for (const auto& [name, v] : mm) {
            detail += name + "=" + fmt(v) + " ";
            if (name != "transient_copy" && v <= tc)
                return Outcome{false, detail + "(transient copy is not the minimum)"};
        }
        return Outcome{true, detail};
    });

    // 7. Branching-model round trips on 1e5 subtrees.
    run(7, "branching fit/generate round trips", [&] {
        Rng rng(31337);
        const auto base_sample = generate(BaselineModel{3, 0.5}, 100000, 3, rng);
        const auto base_fit = std::get<BaselineModel>(fit(ModelKind::Baseline, base_sample));
        if (base_fit.k != 3 || std::abs(base_fit.p - 0.5) > 0.01)
            return Outcome{false,
                           "baseline k=" + std::to_string(base_fit.k) + " p=" + fmt(base_fit.p)};

        DegreeModel degree_truth;
        degree_truth.indegree_pmf = {0.42, 0.25, 0.18, 0.1, 0.05};
        const auto degree_sample = generate(degree_truth, 100000, 3, rng);
        const auto degree_fit = std::get<DegreeModel>(fit(ModelKind::Degree, degree_sample));
        double tv = 0;
        for (std::size_t v = 0; v < 5; ++v)
            tv += std::abs(degree_fit.indegree_pmf[v] - degree_truth.indegree_pmf[v]);
        if (tv / 2 > 0.02) return Outcome{false, "degree TV=" + fmt(tv / 2)};

        ConditionalDegreeModel cond_truth;
        cond_truth.root_pmf = {0.2, 0.3, 0.5};
        cond_truth.cond_pmf = {{1.0, 0.0, 0.0}, {0.3, 0.6, 0.1}, {0.1, 0.3, 0.6}};
        cond_truth.smoothing_alpha = 0.0;
        const auto cond_sample = generate(cond_truth, 100000, 3, rng);
        const auto cond_fit = std::get<ConditionalDegreeModel>(
            fit(ModelKind::ConditionalDegree, cond_sample, 0.0));
        for (std::size_t j = 1; j <= 2; ++j) {
            double row_tv = 0;
            for (std::size_t v = 0; v < 3; ++v)
                row_tv += std::abs(cond_fit.cond_pmf[j][v] - cond_truth.cond_pmf[j][v]);
            if (row_tv / 2 > 0.02)
                return Outcome{false,
                               "conditional row " + std::to_string(j) + " TV=" + fmt(row_tv / 2)};
        }
        return Outcome{true, "baseline p=" + fmt(base_fit.p) + ", pmf TV within 0.02"};
    });

    // 8. AUC rank statistic vs O(n^2) pair counting.
    run(8, "AUC oracle", [&] {
        Rng rng(555);
        int tested = 0;
        for (int trial = 0; trial < 1000; ++trial) {
            const int n = 2 + static_cast<int>(rng.below(199));
            std::vector<std::pair<double, int>> scores;
            int pos = 0;
            for (int i = 0; i < n; ++i) {
                const double s = static_cast<double>(rng.below(16)) / 15.0;
                const int y = rng.bernoulli(0.45) ? 1 : 0;
                pos += y;
                scores.emplace_back(s, y);
            }
            if (pos == 0 || pos == n) continue;
            ++tested;
            double wins = 0;
            std::int64_t pairs = 0;
            for (const auto& [sp, yp] : scores) {
                if (!yp) continue;
                for (const auto& [sn, yn] : scores) {
                    if (yn) continue;
                    ++pairs;
                    wins += sp > sn ? 1.0 : (sp == sn ? 0.5 : 0.0);
                }
            }
            const double want = wins / static_cast<double>(pairs);
            if (std::abs(auc(scores) - want) > 1e-12)
                return Outcome{false, "mismatch on trial " + std::to_string(trial)};
        }
        return Outcome{true, std::to_string(tested) + " random score sets match exactly"};
    });

    // 9. Model-fidelity ordering on each protocol's subtrees.
    run(9, "real-vs-synthetic ordering baseline >= degree >= conditional - 0.02", [&] {
        std::string detail;
        for (const auto& name : f.protocol_names) {
            const auto ptrs = tree_ptrs(f.trees.at(name));
            Rng sample_rng(mix64(41, fnv1a64(name)));
            const auto real = sample_subtrees(
                std::span<const CascadeTree* const>(ptrs.data(), ptrs.size()), 20000, 3,
                sample_rng);
            std::map<ModelKind, double> auc_of;
            for (ModelKind kind :
                 {ModelKind::Baseline, ModelKind::Degree, ModelKind::ConditionalDegree}) {
                const BranchingModel model = fit(kind, real);
                Rng task_rng(mix64(43, mix64(fnv1a64(name), static_cast<int>(kind))));
                auc_of[kind] = real_vs_synthetic_task(real, model, task_rng).auc;
            }
            const double b = auc_of[ModelKind::Baseline];
            const double d = auc_of[ModelKind::Degree];
            const double c = auc_of[ModelKind::ConditionalDegree];
            detail += name + ": b=" + fmt(b) + " d=" + fmt(d) + " c=" + fmt(c) + "; ";
            if (!(b >= d && d >= c - 0.02)) return Outcome{false, detail + "(ordering violated)"};
            if (!(c <= 0.58)) return Outcome{false, detail + "(conditional > 0.58)"};
        }
        return Outcome{true, detail};
    });

    // 10. Differentiation: same-protocol pairs near chance, cross pairs apart.
    run(10, "subtree differentiation diagonal vs cross", [&] {
        const auto& tc_trees = f.trees.at("transient_copy");
        std::vector<const CascadeTree*> even, odd;
        for (std::size_t i = 0; i < tc_trees.size(); ++i)
            (i % 2 == 0 ? even : odd).push_back(&tc_trees[i]);
        Rng ra(811), rb(812), rng_same(813);
        const auto fa = features_of(sample_subtrees(
            std::span<const CascadeTree* const>(even.data(), even.size()), 20000, 3, ra));
        const auto fb = features_of(sample_subtrees(
            std::span<const CascadeTree* const>(odd.data(), odd.size()), 20000, 3, rb));
        const double same = differentiate_task(fa, fb, rng_same).auc;
        if (same > 0.57) return Outcome{false, "same-protocol AUC=" + fmt(same) + " > 0.57"};

        Rng rc(821), rd(822), rng_cross(823);
        const auto tc_ptrs = tree_ptrs(f.trees.at("transient_copy"));
        const auto vol_ptrs = tree_ptrs(f.trees.at("volunteer"));
        const auto ft = features_of(sample_subtrees(
            std::span<const CascadeTree* const>(tc_ptrs.data(), tc_ptrs.size()), 20000, 3, rc));
        const auto fv = features_of(sample_subtrees(
            std::span<const CascadeTree* const>(vol_ptrs.data(), vol_ptrs.size()), 20000, 3,
            rd));
        const double cross = differentiate_task(ft, fv, rng_cross).auc;
        if (cross < 0.60) return Outcome{false, "cross-protocol AUC=" + fmt(cross) + " < 0.60"};
        return Outcome{true, "same=" + fmt(same) + " cross=" + fmt(cross)};
    });

    // 11. Full default pipeline determinism (two runs, identical manifests).
    run(11, "pipeline determinism", [&] {
        const fs::path base =
            fs::temp_directory_path() / ("cascadesim_accept_" + std::to_string(::getpid()));
        const fs::path dir_a = base / "a";
        const fs::path dir_b = base / "b";
        fs::create_directories(dir_a);
        fs::create_directories(dir_b);
        StageOptions opts;
        opts.quiet = true;
        opts.jobs = effective_jobs(0);
        ExperimentConfig ca = default_config();
        ca.output_dir = dir_a.string();
        ExperimentConfig cb = default_config();
        cb.output_dir = dir_b.string();
        const std::string ma = run_pipeline(ca, opts);
        const std::string mb = run_pipeline(cb, opts);
        std::error_code ec;
        fs::remove_all(base, ec);
        if (ma != mb) return Outcome{false, "manifests differ"};
        int artifacts = 0;
        std::istringstream in(ma);
        std::string line;
        while (std::getline(in, line))
            if (line.rfind("artifact ", 0) == 0) ++artifacts;
        return Outcome{true,
                       "byte-identical manifests over " + std::to_string(artifacts) +
                           " artifacts"};
    });

    // 12. Parent-rule oracle on randomized event logs.
    run(12, "earliest-view parent rule oracle", [&] {
        Rng rng(90210);
        for (int trial = 0; trial < 100; ++trial) {
            // Random but consistent log: every adopter has at least one
            // prior view from an earlier adopter.
            const int n_seeds = 1 + static_cast<int>(rng.below(3));
            Cascade cascade;
            cascade.protocol = default_protocol(ProtocolKind::TransientCopy);
            std::vector<NodeId> adopters;
            std::vector<Event> events;
            for (int s = 0; s < n_seeds; ++s) {
                cascade.seeds.push_back(s);
                adopters.push_back(s);
                events.push_back({0.0, EventKind::Post, s, -1, 0});
            }
            const int extras = 1 + static_cast<int>(rng.below(30));
            double t = 0.0;
            NodeId next_id = 100;
            std::map<NodeId, int> views_of;
            for (int e = 0; e < extras; ++e) {
                // Advance past every prior adoption so parents always adopt
                // strictly before their children.
                t += 1.0 + static_cast<double>(rng.below(5));
                const NodeId actor = next_id++;
                const int n_views = 1 + static_cast<int>(rng.below(4));
                double vt = t;
                NodeId last_source = adopters[0];
                for (int v = 0; v < n_views; ++v) {
                    last_source = adopters[rng.below(adopters.size())];
                    events.push_back({vt, EventKind::View, actor, last_source, ++views_of[actor]});
                    vt += 1.0 + static_cast<double>(rng.below(3));
                }
                if (rng.bernoulli(0.8)) {
                    events.push_back({vt + 1.0, EventKind::Adopt, actor, last_source,
                                      views_of[actor]});
                    events.push_back({vt + 1.0, EventKind::Post, actor, -1, 0});
                    adopters.push_back(actor);
                }
                t = vt + 1.0;
            }
            std::stable_sort(events.begin(), events.end(), [](const Event& a, const Event& b) {
                if (a.time != b.time) return a.time < b.time;
                if (a.kind != b.kind) return static_cast<int>(a.kind) < static_cast<int>(b.kind);
                return a.actor < b.actor;
            });
            cascade.events = events;

            // Independent earliest-view reconstruction.
            std::map<NodeId, NodeId> first_seen;
            std::map<NodeId, NodeId> want_parent;
            for (const Event& ev : cascade.events) {
                if (ev.kind == EventKind::View && !first_seen.count(ev.actor))
                    first_seen[ev.actor] = ev.source;
                if (ev.kind == EventKind::Adopt) want_parent[ev.actor] = first_seen[ev.actor];
            }
            const CascadeTree tree = build_tree(cascade);
            for (const auto& [actor, parent] : want_parent) {
                const auto i = tree.index_of(actor);
                if (i < 0 || tree.parent(i) < 0 || tree.id(tree.parent(i)) != parent)
                    return Outcome{false, "parent mismatch on trial " + std::to_string(trial)};
            }
            if (tree.size() != want_parent.size() + cascade.seeds.size())
                return Outcome{false, "node count mismatch on trial " + std::to_string(trial)};
        }
        return Outcome{true, "100 randomized logs match the brute-force reconstruction"};
    });

    std::printf("acceptance: %d of %d executed criteria passed\n", executed - failures,
                executed);
    return failures;
}
