#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cascade/rng.hpp"

namespace cascade {

using NodeId = std::int32_t;

struct NodeAttrs {
    NodeId id = 0;
    bool is_page = false;         // hub/"page" node
    int community = 0;            // label in [0, C)
    double x = 0.0, y = 0.0;      // synthetic position
    double initiation_bias = 1.0; // propensity to initiate friendships, > 0
};

struct EdgeMeta {
    int mutual_friends = 0;
    NodeId initiated_by = 0; // one of the two endpoints
    double distance = 0.0;   // Euclidean distance between endpoint positions
};

struct Edge {
    NodeId u = 0, v = 0; // u < v
    EdgeMeta meta;
};

struct GraphConfig {
    std::int64_t n = 1000;
    double page_fraction = 0.02;
    double degree_exponent = 2.5; // power-law tail exponent for person nodes, > 1
    double page_degree_scale = 20.0;
    int communities = 10;
    double p_in = 4.0; // intra-community attachment weight, >= p_out
    double p_out = 1.0;
    int min_degree = 3; // smallest sampled person degree
    std::uint64_t rng_seed = 1;
};

/// Undirected friendship graph with per-edge cached metadata. Immutable
/// after construction; safe for concurrent reads.
class SocialGraph {
  public:
    SocialGraph() = default;

    /// Builds the graph from explicit attributes and an edge list
    /// (self-loops and duplicates rejected). Mutual-friend counts and
    /// distances are computed here; initiated_by is sampled from the
    /// endpoint biases unless `initiators` supplies them.
    static SocialGraph build(std::vector<NodeAttrs> nodes,
                             const std::vector<std::pair<NodeId, NodeId>>& edges, Rng& rng,
                             const std::vector<NodeId>* initiators = nullptr);

    std::size_t size() const { return nodes_.size(); }
    std::size_t edge_count() const { return edges_.size(); }
    const NodeAttrs& node(NodeId u) const { return nodes_[check(u)]; }
    const std::vector<NodeAttrs>& nodes() const { return nodes_; }
    const std::vector<Edge>& edges() const { return edges_; }

    int degree(NodeId u) const { return static_cast<int>(adj_[check(u)].size()); }
    std::span<const NodeId> neighbors(NodeId u) const {
        const auto& a = adj_[check(u)];
        return {a.data(), a.size()};
    }
    /// Edge index parallel to neighbors(u).
    std::span<const std::uint32_t> incident_edges(NodeId u) const {
        const auto& a = adj_edge_[check(u)];
        return {a.data(), a.size()};
    }
    const Edge& edge(std::uint32_t idx) const { return edges_[idx]; }

    /// |N(u) ∩ N(v)|, recomputed from adjacency (works for non-edges too).
    int mutual_friends(NodeId u, NodeId v) const;

    /// Fraction of u's edges that u initiated. Undefined for degree-0 nodes.
    double initiation_fraction(NodeId u) const;

    /// Node ids holding the top ceil(fraction*n) degrees, ties broken by id.
    std::vector<NodeId> top_degree_nodes(double fraction) const;

    void write(std::ostream& out) const;
    static SocialGraph read(std::istream& in);

  private:
    NodeId check(NodeId u) const;
    std::vector<NodeAttrs> nodes_;
    std::vector<Edge> edges_;
    std::vector<std::vector<NodeId>> adj_;            // sorted
    std::vector<std::vector<std::uint32_t>> adj_edge_; // parallel to adj_
};

/// Samples a power-law degree sequence, wires it with a configuration
/// model, then rewires toward the community mixing implied by p_in/p_out.
SocialGraph generate_graph(const GraphConfig& config);

void save_graph(const SocialGraph& graph, const std::string& path);
SocialGraph load_graph(const std::string& path);

} // namespace cascade
