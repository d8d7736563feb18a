#include "cascade/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <unordered_map>

#include "cascade/util.hpp"

namespace cascade {

namespace {

double mean_of(const std::vector<double>& v) {
    double s = 0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double median_of(std::vector<double> v) {
    std::sort(v.begin(), v.end());
    const std::size_t n = v.size();
    return n % 2 == 1 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

// Cached mutual-friend count when (u,v) is a friendship edge; recomputed
// otherwise (hand-built logs need not follow graph edges).
int mutual_on_edge(const SocialGraph& graph, NodeId u, NodeId v) {
    const auto nb = graph.neighbors(u);
    const auto it = std::lower_bound(nb.begin(), nb.end(), v);
    if (it != nb.end() && *it == v) {
        const auto idx = graph.incident_edges(u)[static_cast<std::size_t>(it - nb.begin())];
        return graph.edge(idx).meta.mutual_friends;
    }
    return graph.mutual_friends(u, v);
}

} // namespace

void ExposureCurve::merge(const ExposureCurve& other) {
    for (const auto& [k, pt] : other.points) {
        Point& mine = points[k];
        mine.n_at_risk += pt.n_at_risk;
        mine.n_adopted += pt.n_adopted;
        mine.p = mine.n_at_risk > 0
                     ? static_cast<double>(mine.n_adopted) / static_cast<double>(mine.n_at_risk)
                     : 0.0;
    }
}

double reproduction_number(const CascadeTree& tree) {
    std::int64_t internal = 0, offspring = 0;
    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i) {
        if (tree.is_leaf(i)) continue;
        ++internal;
        offspring += static_cast<std::int64_t>(tree.children(i).size());
    }
    if (internal == 0)
        throw UndefinedValue("reproduction number undefined: tree has no internal nodes");
    return static_cast<double>(offspring) / static_cast<double>(internal);
}

std::map<int, double> reproduction_number_by_depth(const CascadeTree& tree) {
    std::vector<int> depth(tree.size(), 0);
    std::map<int, std::pair<std::int64_t, std::int64_t>> acc; // depth -> (internal, offspring)
    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i) {
        if (tree.parent(i) >= 0) depth[i] = depth[tree.parent(i)] + 1;
        if (!tree.is_leaf(i)) {
            auto& [internal, offspring] = acc[depth[i]];
            ++internal;
            offspring += static_cast<std::int64_t>(tree.children(i).size());
        }
    }
    std::map<int, double> out;
    for (const auto& [d, io] : acc)
        out[d] = static_cast<double>(io.second) / static_cast<double>(io.first);
    return out;
}

CascadeSummary summarize(const Cascade& cascade, const CascadeTree& tree,
                         const SocialGraph& graph) {
    if (tree.size() == 0) throw InvalidArgument("summarize: empty tree");
    CascadeSummary s;
    s.adoptions = tree.size();

    std::int64_t views = 0;
    std::unordered_map<NodeId, double> post_time;
    for (const Event& ev : cascade.events) {
        if (ev.kind == EventKind::View) ++views;
        if (ev.kind == EventKind::Post) post_time.emplace(ev.actor, ev.time);
    }
    s.exposures_per_adopter = static_cast<double>(views) / static_cast<double>(s.adoptions);

    const auto top = graph.top_degree_nodes(0.01);
    std::vector<char> is_top(graph.size(), 0);
    for (NodeId t : top) is_top[t] = 1;

    std::int64_t non_roots = 0, top_parented = 0;
    std::vector<double> mutual, prior, delays;
    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i) {
        const auto p = tree.parent(i);
        if (p < 0) continue;
        ++non_roots;
        const NodeId child_id = tree.id(i);
        const NodeId parent_id = tree.id(p);
        if (is_top[parent_id]) ++top_parented;
        mutual.push_back(mutual_on_edge(graph, parent_id, child_id));

        int prior_friends = 0;
        for (NodeId f : graph.neighbors(child_id)) {
            const auto fi = tree.index_of(f);
            if (fi >= 0 && tree.adoption_time(fi) < tree.adoption_time(i)) ++prior_friends;
        }
        prior.push_back(prior_friends);

        const auto pt = post_time.find(parent_id);
        const double parent_post = pt != post_time.end() ? pt->second : tree.adoption_time(p);
        delays.push_back(tree.adoption_time(i) - parent_post);
    }
    s.top1pct_share =
        non_roots > 0 ? static_cast<double>(top_parented) / static_cast<double>(non_roots) : 0.0;
    if (!mutual.empty()) s.mean_mutual_friends = mean_of(mutual);
    if (!prior.empty()) {
        s.mean_prior_adopted_friends = mean_of(prior);
        s.median_prior_adopted_friends = median_of(prior);
    }
    if (!delays.empty()) s.mean_adoption_delay = mean_of(delays);
    try {
        s.reproduction_number = reproduction_number(tree);
    } catch (const UndefinedValue&) {
        s.reproduction_number.reset();
    }
    return s;
}

ExposureCurve exposure_curve(const Cascade& cascade) {
    ExposureCurve curve;
    for (const Event& ev : cascade.events) {
        if (ev.exposure_index <= 0) continue;
        if (ev.kind == EventKind::View) ++curve.points[ev.exposure_index].n_at_risk;
        if (ev.kind == EventKind::Adopt) ++curve.points[ev.exposure_index].n_adopted;
    }
    for (auto& [k, pt] : curve.points)
        pt.p = pt.n_at_risk > 0
                   ? static_cast<double>(pt.n_adopted) / static_cast<double>(pt.n_at_risk)
                   : 0.0;
    return curve;
}

StatusDifferential status_differential(const Cascade& cascade, const CascadeTree& tree,
                                       const SocialGraph& graph) {
    std::vector<double> if_parent, if_child, if_exposed;
    std::vector<double> deg_parent, deg_child;

    for (CascadeTree::Index i = 0; i < static_cast<CascadeTree::Index>(tree.size()); ++i) {
        const NodeId id = tree.id(i);
        if (!tree.is_leaf(i)) {
            deg_parent.push_back(graph.degree(id));
            if (graph.degree(id) > 0) if_parent.push_back(graph.initiation_fraction(id));
        }
        if (tree.parent(i) >= 0) {
            deg_child.push_back(graph.degree(id));
            if (graph.degree(id) > 0) if_child.push_back(graph.initiation_fraction(id));
        }
    }
    std::vector<char> viewed(graph.size(), 0);
    for (const Event& ev : cascade.events)
        if (ev.kind == EventKind::View) viewed[ev.actor] = 1;
    for (NodeId v = 0; v < static_cast<NodeId>(graph.size()); ++v)
        if (viewed[v] && tree.index_of(v) < 0 && graph.degree(v) > 0)
            if_exposed.push_back(graph.initiation_fraction(v));

    StatusDifferential out;
    if (!if_parent.empty()) out.mean_if_parent = mean_of(if_parent);
    if (!if_child.empty()) out.mean_if_child = mean_of(if_child);
    if (!if_exposed.empty()) out.mean_if_exposed_only = mean_of(if_exposed);
    if (!deg_parent.empty() && !deg_child.empty())
        out.friend_count_gap = mean_of(deg_parent) - mean_of(deg_child);
    return out;
}

namespace {

ProtocolSpec scaled_spec(const ProtocolSpec& spec, double multiplier) {
    ProtocolSpec out = spec;
    ExposureResponse& r = response_of(out);
    r.base_rate = std::clamp(r.base_rate * multiplier, 0.0, 1.0);
    return out;
}

} // namespace

CalibrationResult calibrate_reproduction(const SocialGraph& graph, const ProtocolSpec& spec,
                                         const std::vector<NodeId>& seeds, double target_r,
                                         double tol, int runs, double horizon, Rng rng,
                                         int jobs) {
    if (!(target_r > 0)) throw InvalidArgument("target_R must be > 0");
    if (!(tol > 0)) throw InvalidArgument("tol must be > 0");
    if (runs < 1) throw InvalidArgument("runs must be >= 1");
    const double base = response_of(spec).base_rate;
    if (!(base > 0)) throw InvalidArgument("calibration needs base_rate > 0");

    // Fixed per-run streams: the objective is a deterministic function of
    // the multiplier (common random numbers).
    std::vector<std::uint64_t> run_seeds(runs);
    for (int i = 0; i < runs; ++i) run_seeds[i] = rng.derive(0x43414c49u, i).next();

    int evaluations = 0;
    auto eval = [&](double m) {
        ++evaluations;
        const ProtocolSpec candidate = scaled_spec(spec, m);
        std::vector<double> r(runs, 0.0);
        parallel_for(static_cast<std::size_t>(runs), jobs, [&](std::size_t i) {
            const Cascade c = simulate(graph, candidate, seeds, horizon, Rng(run_seeds[i]));
            try {
                r[i] = reproduction_number(build_tree(c));
            } catch (const UndefinedValue&) {
                r[i] = 0.0; // cascade died before spreading
            }
        });
        double s = 0;
        for (double x : r) s += x;
        return s / runs;
    };

    const double m_cap = 1.0 / base; // base_rate saturates at 1 here
    double lo = 0.0, r_lo = 0.0;
    double hi = std::min(1.0, m_cap);
    double r_hi = eval(hi);
    if (std::abs(r_hi - target_r) <= tol)
        return {scaled_spec(spec, hi), hi, r_hi, evaluations};
    while (r_hi < target_r && hi < m_cap) {
        const double next = std::min(hi * 2.0, m_cap);
        const double r_next = eval(next);
        if (std::abs(r_next - target_r) <= tol)
            return {scaled_spec(spec, next), next, r_next, evaluations};
        if (r_next + tol < r_hi)
            throw std::runtime_error("calibration: non-monotone bracket (R fell from " +
                                     format_double(r_hi) + " to " + format_double(r_next) + ")");
        lo = hi;
        r_lo = r_hi;
        hi = next;
        r_hi = r_next;
    }
    if (r_hi + tol < target_r)
        throw std::runtime_error("calibration: target R=" + format_double(target_r) +
                                 " unreachable; R=" + format_double(r_hi) +
                                 " at base_rate=1 bound");
    if (r_lo > r_hi + tol) throw std::runtime_error("calibration: non-monotone bracket");

    // The objective is an empirical step function; track the closest
    // evaluation in case the exact crossing falls between steps.
    double best_m = hi, best_r = r_hi;
    if (std::abs(r_lo - target_r) < std::abs(best_r - target_r)) {
        best_m = lo;
        best_r = r_lo;
    }
    for (int iter = 0; iter < 80 && hi - lo > 1e-4 * hi; ++iter) {
        const double mid = 0.5 * (lo + hi);
        const double r_mid = eval(mid);
        if (std::abs(r_mid - target_r) <= tol)
            return {scaled_spec(spec, mid), mid, r_mid, evaluations};
        if (std::abs(r_mid - target_r) < std::abs(best_r - target_r)) {
            best_m = mid;
            best_r = r_mid;
        }
        if (r_mid < target_r)
            lo = mid;
        else
            hi = mid;
    }
    if (std::abs(best_r - target_r) <= tol)
        return {scaled_spec(spec, best_m), best_m, best_r, evaluations};
    throw std::runtime_error("calibration did not converge: best measured R=" +
                             format_double(best_r) + " vs target " + format_double(target_r) +
                             " +/- " + format_double(tol));
}

std::string summary_csv_header() {
    return "protocol,replicate,adoptions,exposures_per_adopter,top1pct_share,"
           "mean_mutual_friends,mean_prior_adopted_friends,median_prior_adopted_friends,"
           "mean_adoption_delay,reproduction_number";
}

namespace {
std::string opt_str(const std::optional<double>& v) {
    return v ? format_double(*v) : std::string();
}
} // namespace

std::string summary_csv_row(const std::string& protocol, int replicate,
                            const CascadeSummary& s) {
    std::ostringstream out;
    out << protocol << ',' << replicate << ',' << s.adoptions << ','
        << format_double(s.exposures_per_adopter) << ',' << format_double(s.top1pct_share) << ','
        << opt_str(s.mean_mutual_friends) << ',' << opt_str(s.mean_prior_adopted_friends) << ','
        << opt_str(s.median_prior_adopted_friends) << ',' << opt_str(s.mean_adoption_delay) << ','
        << opt_str(s.reproduction_number);
    return out.str();
}

std::string exposure_curve_csv(const ExposureCurve& curve) {
    std::ostringstream out;
    out << "k,n_at_risk,n_adopted,p_k\n";
    for (const auto& [k, pt] : curve.points)
        out << k << ',' << pt.n_at_risk << ',' << pt.n_adopted << ',' << format_double(pt.p)
            << "\n";
    return out.str();
}

} // namespace cascade
