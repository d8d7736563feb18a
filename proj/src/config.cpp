#include "cascade/config.hpp"

#include <cstdlib>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "cascade/util.hpp"

namespace cascade {

using nlohmann::json;

namespace {

[[noreturn]] void fail(const std::string& field, const std::string& what) {
    throw ConfigError("config field '" + field + "': " + what);
}

template <typename T>
T get_or(const json& obj, const std::string& field, const std::string& scope, T fallback) {
    if (!obj.contains(field)) return fallback;
    try {
        return obj.at(field).get<T>();
    } catch (const json::exception& e) {
        fail(scope + field, e.what());
    }
}

ExposureResponse parse_response(const json& obj, const std::string& scope,
                                const ExposureResponse& base) {
    ExposureResponse r = base;
    r.base_rate = get_or(obj, "base_rate", scope, r.base_rate);
    if (obj.contains("shape")) {
        try {
            r.shape = shape_from_name(obj.at("shape").get<std::string>());
        } catch (const std::exception& e) {
            fail(scope + "shape", e.what());
        }
    }
    r.shape_strength = get_or(obj, "shape_strength", scope, r.shape_strength);
    r.tie_boost = get_or(obj, "tie_boost", scope, r.tie_boost);
    r.social_cost_boost = get_or(obj, "social_cost_boost", scope, r.social_cost_boost);
    r.page_rate_scale = get_or(obj, "page_rate_scale", scope, r.page_rate_scale);
    if (r.base_rate < 0 || r.base_rate > 1) fail(scope + "base_rate", "must be in [0,1]");
    if (r.shape_strength < 0) fail(scope + "shape_strength", "must be >= 0");
    if (r.tie_boost < 0) fail(scope + "tie_boost", "must be >= 0");
    if (r.social_cost_boost < 0) fail(scope + "social_cost_boost", "must be >= 0");
    if (r.page_rate_scale < 0 || r.page_rate_scale > 1)
        fail(scope + "page_rate_scale", "must be in [0,1]");
    return r;
}

DelayModel parse_delays(const json& obj, const std::string& scope, const DelayModel& base) {
    DelayModel d = base;
    d.view_delay_median = get_or(obj, "view_delay_median", scope, d.view_delay_median);
    d.effort_delay_median = get_or(obj, "effort_delay_median", scope, d.effort_delay_median);
    d.dispersion = get_or(obj, "dispersion", scope, d.dispersion);
    if (d.view_delay_median <= 0) fail(scope + "view_delay_median", "must be > 0");
    if (d.effort_delay_median <= 0) fail(scope + "effort_delay_median", "must be > 0");
    if (d.dispersion < 0) fail(scope + "dispersion", "must be >= 0");
    return d;
}

ProtocolSpec parse_protocol(const json& obj, const std::string& scope) {
    if (!obj.contains("kind")) fail(scope + "kind", "missing");
    ProtocolKind kind;
    try {
        kind = protocol_from_name(obj.at("kind").get<std::string>());
    } catch (const std::exception& e) {
        fail(scope + "kind", e.what());
    }
    ProtocolSpec spec = default_protocol(kind);
    const ExposureResponse resp =
        obj.contains("response") ? parse_response(obj.at("response"), scope + "response.",
                                                  response_of(spec))
                                 : response_of(spec);
    const DelayModel dels = obj.contains("delays")
                                ? parse_delays(obj.at("delays"), scope + "delays.",
                                               delays_of(spec))
                                : delays_of(spec);

    if (auto* t = std::get_if<TransientCopy>(&spec)) {
        t->view_prob = get_or(obj, "view_prob", scope, t->view_prob);
        t->visibility_window = get_or(obj, "visibility_window", scope, t->visibility_window);
        t->response = resp;
        t->delays = dels;
        if (t->visibility_window <= 0) fail(scope + "visibility_window", "must be > 0");
    } else if (auto* p = std::get_if<PersistentCopy>(&spec)) {
        p->view_prob = get_or(obj, "view_prob", scope, p->view_prob);
        p->visibility_window = get_or(obj, "visibility_window", scope, p->visibility_window);
        p->repeat_view_rate = get_or(obj, "repeat_view_rate", scope, p->repeat_view_rate);
        p->response = resp;
        p->delays = dels;
        if (p->visibility_window <= 0) fail(scope + "visibility_window", "must be > 0");
        if (p->repeat_view_rate < 0) fail(scope + "repeat_view_rate", "must be >= 0");
    } else if (auto* nm = std::get_if<Nomination>(&spec)) {
        nm->fanout = get_or(obj, "fanout", scope, nm->fanout);
        nm->view_prob = get_or(obj, "view_prob", scope, nm->view_prob);
        nm->response = resp;
        nm->delays = dels;
        if (nm->fanout < 1) fail(scope + "fanout", "must be >= 1");
    } else if (auto* v = std::get_if<Volunteer>(&spec)) {
        v->view_prob = get_or(obj, "view_prob", scope, v->view_prob);
        v->signup_prob = get_or(obj, "signup_prob", scope, v->signup_prob);
        v->max_assignments = get_or(obj, "max_assignments", scope, v->max_assignments);
        v->completion_prob = get_or(obj, "completion_prob", scope, v->completion_prob);
        v->response = resp;
        v->delays = dels;
        if (v->signup_prob < 0 || v->signup_prob > 1) fail(scope + "signup_prob", "in [0,1]");
        if (v->completion_prob < 0 || v->completion_prob > 1)
            fail(scope + "completion_prob", "in [0,1]");
        if (v->max_assignments < 1) fail(scope + "max_assignments", "must be >= 1");
    }
    const double vp = view_prob_of(spec);
    if (vp < 0 || vp > 1) fail(scope + "view_prob", "must be in [0,1]");
    return spec;
}

json response_json(const ExposureResponse& r) {
    return {{"base_rate", r.base_rate},
            {"shape", shape_name(r.shape)},
            {"shape_strength", r.shape_strength},
            {"tie_boost", r.tie_boost},
            {"social_cost_boost", r.social_cost_boost},
            {"page_rate_scale", r.page_rate_scale}};
}

json delays_json(const DelayModel& d) {
    return {{"view_delay_median", d.view_delay_median},
            {"effort_delay_median", d.effort_delay_median},
            {"dispersion", d.dispersion}};
}

json protocol_json(const ProtocolSpec& spec) {
    json obj;
    obj["kind"] = protocol_name(kind_of(spec));
    obj["view_prob"] = view_prob_of(spec);
    obj["response"] = response_json(response_of(spec));
    obj["delays"] = delays_json(delays_of(spec));
    if (const auto* t = std::get_if<TransientCopy>(&spec)) {
        obj["visibility_window"] = t->visibility_window;
    } else if (const auto* p = std::get_if<PersistentCopy>(&spec)) {
        obj["visibility_window"] = p->visibility_window;
        obj["repeat_view_rate"] = p->repeat_view_rate;
    } else if (const auto* nm = std::get_if<Nomination>(&spec)) {
        obj["fanout"] = nm->fanout;
    } else if (const auto* v = std::get_if<Volunteer>(&spec)) {
        obj["signup_prob"] = v->signup_prob;
        obj["max_assignments"] = v->max_assignments;
        obj["completion_prob"] = v->completion_prob;
    }
    return obj;
}

} // namespace

ExperimentConfig default_config() {
    ExperimentConfig c;
    c.graph = GraphConfig{};
    c.graph.n = 50000;
    // Small, tight communities so the mutual-friend tie proxy is alive:
    // 50-node cells with ~64% of edges internal.
    c.graph.communities = 1000;
    c.graph.p_in = 1800.0;
    c.graph.p_out = 1.0;
    c.graph.rng_seed = 0; // derived from master_seed
    for (ProtocolKind k : {ProtocolKind::TransientCopy, ProtocolKind::PersistentCopy,
                           ProtocolKind::Nomination, ProtocolKind::Volunteer})
        c.protocols.emplace(protocol_name(k), default_protocol(k));
    c.seeds.k = 25;
    c.analysis.subtree_count_differentiate = 10000;
    c.analysis.subtree_count_fit = 50000;
    c.master_seed = 20260810;
    return c;
}

ExperimentConfig parse_config(const std::string& text, const std::uint64_t* seed_override,
                              const std::string* out_override) {
    json root;
    try {
        root = json::parse(text);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config is not valid JSON: ") + e.what());
    }
    if (!root.is_object()) throw ConfigError("config root must be an object");

    ExperimentConfig c = default_config();
    if (root.contains("graph")) {
        const json& g = root.at("graph");
        c.graph.n = get_or<std::int64_t>(g, "n", "graph.", c.graph.n);
        c.graph.page_fraction = get_or(g, "page_fraction", "graph.", c.graph.page_fraction);
        c.graph.degree_exponent = get_or(g, "degree_exponent", "graph.", c.graph.degree_exponent);
        c.graph.page_degree_scale =
            get_or(g, "page_degree_scale", "graph.", c.graph.page_degree_scale);
        c.graph.communities = get_or(g, "communities", "graph.", c.graph.communities);
        c.graph.p_in = get_or(g, "p_in", "graph.", c.graph.p_in);
        c.graph.p_out = get_or(g, "p_out", "graph.", c.graph.p_out);
        c.graph.min_degree = get_or(g, "min_degree", "graph.", c.graph.min_degree);
        c.graph.rng_seed = get_or<std::uint64_t>(g, "rng_seed", "graph.", c.graph.rng_seed);
        if (c.graph.n < 1) fail("graph.n", "must be >= 1");
        if (c.graph.p_out < 0 || c.graph.p_in < c.graph.p_out)
            fail("graph.p_in", "require p_in >= p_out >= 0");
        if (c.graph.degree_exponent <= 1) fail("graph.degree_exponent", "must be > 1");
    }
    if (root.contains("protocols")) {
        if (!root.at("protocols").is_object() || root.at("protocols").empty())
            fail("protocols", "must be a nonempty object");
        c.protocols.clear();
        for (const auto& [name, obj] : root.at("protocols").items())
            c.protocols.emplace(name, parse_protocol(obj, "protocols." + name + "."));
    }
    if (root.contains("seeds")) {
        const json& s = root.at("seeds");
        const std::string rule = get_or<std::string>(s, "rule", "seeds.", "random_k");
        if (rule == "random_k") {
            c.seeds.kind = SeedRule::Kind::RandomK;
        } else if (rule == "top_degree_k") {
            c.seeds.kind = SeedRule::Kind::TopDegreeK;
        } else if (rule == "explicit") {
            c.seeds.kind = SeedRule::Kind::Explicit;
        } else {
            fail("seeds.rule", "must be random_k, top_degree_k, or explicit");
        }
        c.seeds.k = get_or(s, "k", "seeds.", c.seeds.k);
        if (s.contains("ids")) {
            c.seeds.explicit_ids.clear();
            for (const auto& v : s.at("ids"))
                c.seeds.explicit_ids.push_back(v.get<NodeId>());
        }
        if (c.seeds.kind == SeedRule::Kind::Explicit && c.seeds.explicit_ids.empty())
            fail("seeds.ids", "explicit rule needs a nonempty id list");
        if (c.seeds.kind != SeedRule::Kind::Explicit && c.seeds.k < 1)
            fail("seeds.k", "must be >= 1");
    }
    c.horizon = get_or(root, "horizon", "", c.horizon);
    if (!(c.horizon > 0)) fail("horizon", "must be > 0");
    c.replicates = get_or(root, "replicates", "", c.replicates);
    if (c.replicates < 1) fail("replicates", "must be >= 1");
    if (root.contains("analysis")) {
        const json& a = root.at("analysis");
        AnalysisConfig& an = c.analysis;
        an.subtree_d = get_or(a, "subtree_d", "analysis.", an.subtree_d);
        if (an.subtree_d < 0) fail("analysis.subtree_d", "must be >= 0");
        if (a.contains("subtree_counts")) {
            const json& sc = a.at("subtree_counts");
            an.subtree_count_differentiate = get_or<std::size_t>(
                sc, "differentiate", "analysis.subtree_counts.", an.subtree_count_differentiate);
            an.subtree_count_fit =
                get_or<std::size_t>(sc, "fit", "analysis.subtree_counts.", an.subtree_count_fit);
        }
        if (a.contains("model_kinds")) {
            an.model_kinds.clear();
            for (const auto& v : a.at("model_kinds")) {
                try {
                    an.model_kinds.push_back(model_kind_from_name(v.get<std::string>()));
                } catch (const std::exception& e) {
                    fail("analysis.model_kinds", e.what());
                }
            }
        }
        if (a.contains("tasks")) {
            an.tasks.clear();
            for (const auto& v : a.at("tasks")) an.tasks.push_back(v.get<std::string>());
        }
        an.max_task_rows = get_or<std::size_t>(a, "max_task_rows", "analysis.", an.max_task_rows);
        an.smoothing_alpha = get_or(a, "smoothing_alpha", "analysis.", an.smoothing_alpha);
        if (an.smoothing_alpha < 0) fail("analysis.smoothing_alpha", "must be >= 0");
        an.calibration_target_r =
            get_or(a, "calibration_target_r", "analysis.", an.calibration_target_r);
        an.calibration_tol = get_or(a, "calibration_tol", "analysis.", an.calibration_tol);
        an.calibration_runs = get_or(a, "calibration_runs", "analysis.", an.calibration_runs);
        an.calibration_horizon =
            get_or(a, "calibration_horizon", "analysis.", an.calibration_horizon);
        if (!(an.calibration_target_r > 0)) fail("analysis.calibration_target_r", "must be > 0");
        if (!(an.calibration_tol > 0)) fail("analysis.calibration_tol", "must be > 0");
        if (an.calibration_runs < 1) fail("analysis.calibration_runs", "must be >= 1");
        if (an.calibration_horizon < 0) fail("analysis.calibration_horizon", "must be >= 0");
    }
    c.output_dir = get_or<std::string>(root, "output_dir", "", c.output_dir);
    c.master_seed = get_or<std::uint64_t>(root, "master_seed", "", c.master_seed);

    // Task entries are "adoption", "differentiate", "real_vs_synthetic",
    // optionally qualified with protocol names ("adoption:transient_copy",
    // "differentiate:transient_copy|volunteer").
    for (const std::string& t : c.analysis.tasks) {
        const auto colon = t.find(':');
        const std::string head = t.substr(0, colon);
        if (head != "adoption" && head != "differentiate" && head != "real_vs_synthetic")
            fail("analysis.tasks", "unknown task '" + t + "'");
        if (colon == std::string::npos) continue;
        const std::string qualifier = t.substr(colon + 1);
        std::size_t start = 0;
        while (start <= qualifier.size()) {
            const auto bar = qualifier.find('|', start);
            const auto end = bar == std::string::npos ? qualifier.size() : bar;
            const std::string name = qualifier.substr(start, end - start);
            if (!c.protocols.count(name))
                fail("analysis.tasks", "undefined protocol name '" + name + "' in '" + t + "'");
            if (bar == std::string::npos) break;
            start = bar + 1;
        }
    }

    if (seed_override) c.master_seed = *seed_override;
    if (out_override) c.output_dir = *out_override;
    if (const char* env = std::getenv("OUTPUT_DIR"); env && !out_override) c.output_dir = env;
    if (c.output_dir.empty()) fail("output_dir", "must be nonempty");
    return c;
}

ExperimentConfig load_config(const std::string& path, const std::uint64_t* seed_override,
                             const std::string* out_override) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw ConfigError("cannot read config file: " + path);
    std::ostringstream buf;
    buf << in.rdbuf();
    return parse_config(buf.str(), seed_override, out_override);
}

std::string effective_config_text(const ExperimentConfig& c) {
    json root;
    root["graph"] = {{"n", c.graph.n},
                     {"page_fraction", c.graph.page_fraction},
                     {"degree_exponent", c.graph.degree_exponent},
                     {"page_degree_scale", c.graph.page_degree_scale},
                     {"communities", c.graph.communities},
                     {"p_in", c.graph.p_in},
                     {"p_out", c.graph.p_out},
                     {"min_degree", c.graph.min_degree},
                     {"rng_seed", c.graph.rng_seed}};
    json protocols;
    for (const auto& [name, spec] : c.protocols) protocols[name] = protocol_json(spec);
    root["protocols"] = protocols;
    json seeds;
    switch (c.seeds.kind) {
        case SeedRule::Kind::RandomK: seeds["rule"] = "random_k"; break;
        case SeedRule::Kind::TopDegreeK: seeds["rule"] = "top_degree_k"; break;
        case SeedRule::Kind::Explicit: seeds["rule"] = "explicit"; break;
    }
    seeds["k"] = c.seeds.k;
    seeds["ids"] = c.seeds.explicit_ids;
    root["seeds"] = seeds;
    root["horizon"] = c.horizon;
    root["replicates"] = c.replicates;
    json counts = {{"differentiate", c.analysis.subtree_count_differentiate},
                   {"fit", c.analysis.subtree_count_fit}};
    std::vector<std::string> kinds;
    for (ModelKind k : c.analysis.model_kinds) kinds.push_back(model_kind_name(k));
    root["analysis"] = {{"subtree_d", c.analysis.subtree_d},
                        {"subtree_counts", counts},
                        {"model_kinds", kinds},
                        {"tasks", c.analysis.tasks},
                        {"max_task_rows", c.analysis.max_task_rows},
                        {"smoothing_alpha", c.analysis.smoothing_alpha},
                        {"calibration_target_r", c.analysis.calibration_target_r},
                        {"calibration_tol", c.analysis.calibration_tol},
                        {"calibration_runs", c.analysis.calibration_runs},
                        {"calibration_horizon", c.analysis.calibration_horizon}};
    root["master_seed"] = c.master_seed;
    return root.dump(2) + "\n";
}

std::uint64_t config_hash(const ExperimentConfig& config) {
    return fnv1a64(effective_config_text(config));
}

} // namespace cascade
