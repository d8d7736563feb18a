#include "cascade/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <numeric>
#include <ostream>
#include <sstream>
#include <unordered_set>

#include "cascade/util.hpp"

namespace cascade {

namespace {

std::uint64_t edge_key(NodeId u, NodeId v) {
    if (u > v) std::swap(u, v);
    return (static_cast<std::uint64_t>(static_cast<std::uint32_t>(u)) << 32) |
           static_cast<std::uint32_t>(v);
}

int intersect_sorted(std::span<const NodeId> a, std::span<const NodeId> b) {
    int count = 0;
    std::size_t i = 0, j = 0;
    while (i < a.size() && j < b.size()) {
        if (a[i] < b[j]) {
            ++i;
        } else if (b[j] < a[i]) {
            ++j;
        } else {
            ++count;
            ++i;
            ++j;
        }
    }
    return count;
}

} // namespace

NodeId SocialGraph::check(NodeId u) const {
    if (u < 0 || static_cast<std::size_t>(u) >= nodes_.size())
        throw InvalidArgument("unknown node id " + std::to_string(u));
    return u;
}

SocialGraph SocialGraph::build(std::vector<NodeAttrs> nodes,
                               const std::vector<std::pair<NodeId, NodeId>>& edges, Rng& rng,
                               const std::vector<NodeId>* initiators) {
    SocialGraph g;
    g.nodes_ = std::move(nodes);
    const auto n = static_cast<NodeId>(g.nodes_.size());
    for (NodeId i = 0; i < n; ++i) {
        if (g.nodes_[i].id != i) throw InvalidArgument("node ids must be 0..n-1 in order");
        if (g.nodes_[i].initiation_bias <= 0) throw InvalidArgument("initiation_bias must be > 0");
    }
    if (initiators && initiators->size() != edges.size())
        throw InvalidArgument("initiators list must match edge list");

    std::vector<Edge> canon;
    canon.reserve(edges.size());
    std::unordered_set<std::uint64_t> seen;
    seen.reserve(edges.size() * 2);
    for (std::size_t i = 0; i < edges.size(); ++i) {
        auto [u, v] = edges[i];
        if (u == v) throw InvalidArgument("self-loop on node " + std::to_string(u));
        if (u < 0 || v < 0 || u >= n || v >= n) throw InvalidArgument("edge endpoint out of range");
        if (!seen.insert(edge_key(u, v)).second) throw InvalidArgument("duplicate edge");
        Edge e;
        e.u = std::min(u, v);
        e.v = std::max(u, v);
        if (initiators) {
            e.meta.initiated_by = (*initiators)[i];
            if (e.meta.initiated_by != e.u && e.meta.initiated_by != e.v)
                throw InvalidArgument("initiated_by must be an edge endpoint");
        }
        canon.push_back(e);
    }
    std::sort(canon.begin(), canon.end(),
              [](const Edge& a, const Edge& b) { return a.u != b.u ? a.u < b.u : a.v < b.v; });
    g.edges_ = std::move(canon);

    g.adj_.assign(n, {});
    g.adj_edge_.assign(n, {});
    for (std::uint32_t idx = 0; idx < g.edges_.size(); ++idx) {
        const Edge& e = g.edges_[idx];
        g.adj_[e.u].push_back(e.v);
        g.adj_edge_[e.u].push_back(idx);
        g.adj_[e.v].push_back(e.u);
        g.adj_edge_[e.v].push_back(idx);
    }
    for (NodeId u = 0; u < n; ++u) {
        // Sort neighbor list and keep the edge-index list aligned.
        auto& a = g.adj_[u];
        auto& ae = g.adj_edge_[u];
        std::vector<std::size_t> order(a.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
        std::vector<NodeId> a2(a.size());
        std::vector<std::uint32_t> ae2(a.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            a2[i] = a[order[i]];
            ae2[i] = ae[order[i]];
        }
        a = std::move(a2);
        ae = std::move(ae2);
    }

    for (Edge& e : g.edges_) {
        e.meta.mutual_friends = intersect_sorted(g.neighbors(e.u), g.neighbors(e.v));
        const NodeAttrs& nu = g.nodes_[e.u];
        const NodeAttrs& nv = g.nodes_[e.v];
        e.meta.distance = std::hypot(nu.x - nv.x, nu.y - nv.y);
        if (!initiators) {
            const double pu = nu.initiation_bias / (nu.initiation_bias + nv.initiation_bias);
            e.meta.initiated_by = rng.bernoulli(pu) ? e.u : e.v;
        }
    }
    return g;
}

int SocialGraph::mutual_friends(NodeId u, NodeId v) const {
    check(u);
    check(v);
    if (u == v) throw InvalidArgument("mutual_friends requires distinct nodes");
    return intersect_sorted(neighbors(u), neighbors(v));
}

double SocialGraph::initiation_fraction(NodeId u) const {
    check(u);
    const auto& incident = adj_edge_[u];
    if (incident.empty())
        throw UndefinedValue("initiation_fraction undefined for degree-0 node " +
                             std::to_string(u));
    int initiated = 0;
    for (std::uint32_t idx : incident)
        if (edges_[idx].meta.initiated_by == u) ++initiated;
    return static_cast<double>(initiated) / static_cast<double>(incident.size());
}

std::vector<NodeId> SocialGraph::top_degree_nodes(double fraction) const {
    const std::size_t n = nodes_.size();
    const auto k = static_cast<std::size_t>(
        std::min<double>(static_cast<double>(n), std::ceil(fraction * static_cast<double>(n))));
    std::vector<NodeId> ids(n);
    std::iota(ids.begin(), ids.end(), 0);
    std::sort(ids.begin(), ids.end(), [&](NodeId a, NodeId b) {
        const int da = degree(a), db = degree(b);
        return da != db ? da > db : a < b;
    });
    ids.resize(std::max<std::size_t>(k, 1));
    return ids;
}

SocialGraph generate_graph(const GraphConfig& config) {
    if (config.n < 1) throw InvalidArgument("n must be >= 1");
    if (config.p_out < 0 || config.p_in < config.p_out)
        throw InvalidArgument("require p_in >= p_out >= 0");
    if (config.degree_exponent <= 1.0) throw InvalidArgument("degree_exponent must be > 1");
    if (config.page_fraction < 0 || config.page_fraction > 1)
        throw InvalidArgument("page_fraction must be in [0,1]");
    if (config.communities < 1) throw InvalidArgument("communities must be >= 1");
    if (config.min_degree < 1) throw InvalidArgument("min_degree must be >= 1");

    const auto n = static_cast<NodeId>(config.n);
    const int C = config.communities;
    Rng rng(config.rng_seed);

    // Node attributes. Pages take the lowest ids; communities round-robin,
    // so pages spread evenly across them.
    const auto n_pages = static_cast<NodeId>(std::llround(config.page_fraction * config.n));
    const int grid = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(C))));
    std::vector<NodeAttrs> attrs(n);
    for (NodeId i = 0; i < n; ++i) {
        NodeAttrs& a = attrs[i];
        a.id = i;
        a.is_page = i < n_pages;
        a.community = C > 0 ? i % C : 0;
        const double cx = 10.0 * (a.community % grid);
        const double cy = 10.0 * (a.community / grid);
        a.x = cx + rng.normal();
        a.y = cy + rng.normal();
        a.initiation_bias = std::exp(0.5 * rng.normal());
    }

    // Degree sequence: discrete Pareto tail for persons, scaled for pages.
    // Person degrees are capped well under the sqrt(n) structural cutoff so
    // the hub role belongs to pages; pages get three times that headroom.
    const double gamma = config.degree_exponent;
    const double inv_exp = 1.0 / (gamma - 1.0);
    const auto person_cap = static_cast<std::int64_t>(
        std::max<double>(config.min_degree, std::sqrt(static_cast<double>(config.n)) / 3.0));
    const std::int64_t page_cap = std::min<std::int64_t>(3 * person_cap, config.n / 4);
    std::vector<std::int64_t> want(n, 0);
    if (n > 1) {
        for (NodeId i = 0; i < n; ++i) {
            const double u = rng.uniform01_pos();
            double k = std::floor(config.min_degree * std::pow(u, -inv_exp));
            std::int64_t ki = std::min<std::int64_t>(static_cast<std::int64_t>(k), person_cap);
            if (attrs[i].is_page)
                ki = std::min<std::int64_t>(
                    static_cast<std::int64_t>(std::llround(ki * config.page_degree_scale)),
                    page_cap);
            want[i] = std::min<std::int64_t>(std::max<std::int64_t>(ki, 1), config.n - 1);
        }
        std::int64_t total = std::accumulate(want.begin(), want.end(), std::int64_t{0});
        if (total % 2 != 0) want[rng.below(n)] += 1;
    }

    // Configuration-model wiring; self-loops and duplicate pairs erased.
    // Pages follow people, not each other: page stubs pair exclusively with
    // person stubs, the remaining person stubs pair among themselves.
    std::vector<NodeId> person_stubs, page_stubs;
    for (NodeId i = 0; i < n; ++i) {
        auto& pool = attrs[i].is_page ? page_stubs : person_stubs;
        for (std::int64_t k = 0; k < want[i]; ++k) pool.push_back(i);
    }
    for (std::size_t i = person_stubs.size(); i > 1; --i)
        std::swap(person_stubs[i - 1], person_stubs[rng.below(i)]);
    for (std::size_t i = page_stubs.size(); i > 1; --i)
        std::swap(page_stubs[i - 1], page_stubs[rng.below(i)]);

    std::vector<std::pair<NodeId, NodeId>> edges;
    edges.reserve((person_stubs.size() + page_stubs.size()) / 2);
    std::unordered_set<std::uint64_t> present;
    present.reserve(person_stubs.size() + page_stubs.size());
    auto connect = [&](NodeId u, NodeId v) {
        if (u == v) return;
        if (!present.insert(edge_key(u, v)).second) return;
        edges.emplace_back(u, v);
    };
    const std::size_t page_take = std::min(page_stubs.size(), person_stubs.size());
    for (std::size_t i = 0; i < page_take; ++i) connect(page_stubs[i], person_stubs[i]);
    for (std::size_t i = page_take; i + 1 < person_stubs.size(); i += 2)
        connect(person_stubs[i], person_stubs[i + 1]);

    // Community-biased rewiring: degree-preserving swaps pair up inter-
    // community edge endpoints that share a community, raising the intra
    // fraction to the planted-partition target p_in / (p_in + (C-1) p_out).
    if (C > 1 && edges.size() > 3 && config.p_in + config.p_out > 0) {
        const double denom = config.p_in + (C - 1) * config.p_out;
        const double target = denom > 0 ? config.p_in / denom : 1.0;
        auto comm = [&](NodeId v) { return attrs[v].community; };
        auto is_intra = [&](const std::pair<NodeId, NodeId>& e) {
            return comm(e.first) == comm(e.second);
        };
        std::int64_t intra = 0;
        for (const auto& e : edges)
            if (is_intra(e)) ++intra;
        const auto m = static_cast<std::int64_t>(edges.size());
        const std::int64_t target_count = std::llround(target * static_cast<double>(m));

        // Pages keep their configuration-random (globally spread) edges;
        // only person-person ties get pulled into communities, and each
        // person holds at most kMaxIntraTies of them, so high-degree nodes
        // stay weakly tied to most of their audience.
        constexpr int kMaxIntraTies = 12;
        std::vector<std::vector<NodeId>> members(C);
        for (NodeId v = 0; v < n; ++v)
            if (!attrs[v].is_page) members[attrs[v].community].push_back(v);
        std::vector<int> intra_ties(n, 0);
        for (const auto& e : edges) {
            if (is_intra(e)) {
                ++intra_ties[e.first];
                ++intra_ties[e.second];
            }
        }
        std::vector<std::vector<std::uint32_t>> incident(n);
        for (std::uint32_t e = 0; e < edges.size(); ++e) {
            incident[edges[e].first].push_back(e);
            incident[edges[e].second].push_back(e);
        }
        auto drop_incident = [&](NodeId v, std::uint32_t e) {
            auto& list = incident[v];
            for (auto& x : list) {
                if (x == e) {
                    x = list.back();
                    list.pop_back();
                    return;
                }
            }
        };

        const std::int64_t max_attempts = 80 * m;
        for (std::int64_t attempt = 0; attempt < max_attempts && intra < target_count;
             ++attempt) {
            const auto e1 = static_cast<std::uint32_t>(rng.below(edges.size()));
            if (is_intra(edges[e1])) continue;
            const bool flip = rng.below(2) == 1;
            const NodeId u = flip ? edges[e1].second : edges[e1].first;
            const NodeId b = flip ? edges[e1].first : edges[e1].second;
            if (attrs[u].is_page || intra_ties[u] >= kMaxIntraTies) continue;
            const auto& home = members[comm(u)];
            if (home.size() < 2) continue;
            const NodeId v = home[rng.below(home.size())];
            if (v == u || incident[v].empty() || intra_ties[v] >= kMaxIntraTies) continue;
            const auto e2 = incident[v][rng.below(incident[v].size())];
            if (e2 == e1 || is_intra(edges[e2])) continue;
            const NodeId d = edges[e2].first == v ? edges[e2].second : edges[e2].first;
            if (d == u || d == b || b == v) continue;
            // (u,b) + (v,d) -> (u,v) + (b,d): +1 intra at least.
            if (present.count(edge_key(u, v)) || present.count(edge_key(b, d))) continue;
            present.erase(edge_key(u, b));
            present.erase(edge_key(v, d));
            present.insert(edge_key(u, v));
            present.insert(edge_key(b, d));
            intra += 1;
            ++intra_ties[u];
            ++intra_ties[v];
            if (comm(b) == comm(d)) {
                ++intra;
                ++intra_ties[b];
                ++intra_ties[d];
            }
            drop_incident(b, e1);
            drop_incident(v, e2);
            edges[e1] = {u, v};
            edges[e2] = {b, d};
            incident[v].push_back(e1);
            incident[b].push_back(e2);
        }
    }

    return SocialGraph::build(std::move(attrs), edges, rng);
}

void SocialGraph::write(std::ostream& out) const {
    out << "#nodes " << nodes_.size() << "\n";
    for (const NodeAttrs& a : nodes_) {
        out << "N " << a.id << ' ' << (a.is_page ? 1 : 0) << ' ' << a.community << ' '
            << format_sig(a.x, 6) << ' ' << format_sig(a.y, 6) << ' '
            << format_sig(a.initiation_bias, 6) << "\n";
    }
    for (const Edge& e : edges_) {
        out << "E " << e.u << ' ' << e.v << ' ' << e.meta.mutual_friends << ' '
            << e.meta.initiated_by << ' ' << format_sig(e.meta.distance, 6) << "\n";
    }
}

SocialGraph SocialGraph::read(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty graph file");
    auto header = split_ws(line);
    if (header.size() != 2 || header[0] != "#nodes")
        throw InvalidArgument("graph file must start with '#nodes <n>'");
    const auto n = parse_int(header[1]);
    if (n < 1) throw InvalidArgument("graph file: n must be >= 1");

    SocialGraph g;
    g.nodes_.reserve(static_cast<std::size_t>(n));
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok[0] == "N") {
            if (tok.size() != 7) throw InvalidArgument("bad node line: " + line);
            NodeAttrs a;
            a.id = static_cast<NodeId>(parse_int(tok[1]));
            a.is_page = parse_int(tok[2]) != 0;
            a.community = static_cast<int>(parse_int(tok[3]));
            a.x = parse_double(tok[4]);
            a.y = parse_double(tok[5]);
            a.initiation_bias = parse_double(tok[6]);
            g.nodes_.push_back(a);
        } else if (tok[0] == "E") {
            if (tok.size() != 6) throw InvalidArgument("bad edge line: " + line);
            Edge e;
            e.u = static_cast<NodeId>(parse_int(tok[1]));
            e.v = static_cast<NodeId>(parse_int(tok[2]));
            e.meta.mutual_friends = static_cast<int>(parse_int(tok[3]));
            e.meta.initiated_by = static_cast<NodeId>(parse_int(tok[4]));
            e.meta.distance = parse_double(tok[5]);
            g.edges_.push_back(e);
        } else {
            throw InvalidArgument("unrecognized graph line: " + line);
        }
    }
    if (g.nodes_.size() != static_cast<std::size_t>(n))
        throw InvalidArgument("graph file: node count mismatch");

    g.adj_.assign(g.nodes_.size(), {});
    g.adj_edge_.assign(g.nodes_.size(), {});
    for (std::uint32_t idx = 0; idx < g.edges_.size(); ++idx) {
        const Edge& e = g.edges_[idx];
        if (e.u < 0 || e.v < 0 || e.u >= n || e.v >= n || e.u == e.v)
            throw InvalidArgument("graph file: bad edge endpoints");
        g.adj_[e.u].push_back(e.v);
        g.adj_edge_[e.u].push_back(idx);
        g.adj_[e.v].push_back(e.u);
        g.adj_edge_[e.v].push_back(idx);
    }
    for (std::size_t u = 0; u < g.nodes_.size(); ++u) {
        auto& a = g.adj_[u];
        auto& ae = g.adj_edge_[u];
        std::vector<std::size_t> order(a.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t i, std::size_t j) { return a[i] < a[j]; });
        std::vector<NodeId> a2(a.size());
        std::vector<std::uint32_t> ae2(a.size());
        for (std::size_t i = 0; i < order.size(); ++i) {
            a2[i] = a[order[i]];
            ae2[i] = ae[order[i]];
        }
        a = std::move(a2);
        ae = std::move(ae2);
    }
    return g;
}

void save_graph(const SocialGraph& graph, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::ostringstream buf;
    graph.write(buf);
    out << buf.str();
    if (!out) throw std::runtime_error("write failed: " + path);
}

SocialGraph load_graph(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open graph file: " + path);
    return SocialGraph::read(in);
}

} // namespace cascade
