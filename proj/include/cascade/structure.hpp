#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cascade/engine.hpp"

namespace cascade {

/// Depth-bounded fragment of a cascade tree. Nodes are stored in BFS order
/// from the root, so a node's parent always precedes it. Tree edges are
/// oriented child -> parent; a node's "in-degree" is its child count.
struct Subtree {
    NodeId root = 0;
    int depth_limit = 0;
    std::vector<NodeId> nodes;         // nodes[0] == root
    std::vector<std::int32_t> parent;  // index into nodes; -1 for the root

    std::size_t size() const { return nodes.size(); }
    std::vector<std::pair<NodeId, NodeId>> edges() const; // (child, parent) ids

    /// Child count per node (the tree in-degree).
    std::vector<int> indegrees() const;
    /// Hop distance from the root per node.
    std::vector<int> depths() const;
};

struct FeatureVector {
    double n_nodes = 0;
    double n_edges = 0;
    double leaf_fraction = 0;
    double indegree_entropy = 0;        // bits
    double mean_internal_indegree = 0;  // branching factor; 0 for all-leaf subtrees
    double depth = 0;

    static constexpr std::size_t kCount = 6;
    std::array<double, kCount> values() const {
        return {n_nodes, n_edges, leaf_fraction, indegree_entropy, mean_internal_indegree, depth};
    }
    static const std::vector<std::string>& names();
};

inline constexpr int kDefaultSubtreeDepth = 3;
inline constexpr std::size_t kDefaultDifferentiationSamples = 400000;
inline constexpr std::size_t kDefaultFittingSamples = 200000;

/// Uniform-root subtree sampling with replacement: pick a node, take all
/// descendants within `depth` levels.
std::vector<Subtree> sample_subtrees(const CascadeTree& tree, std::size_t count, int depth,
                                     Rng& rng);

/// Same, pooled over several trees; roots are uniform over the union of
/// their nodes.
std::vector<Subtree> sample_subtrees(std::span<const CascadeTree* const> trees,
                                     std::size_t count, int depth, Rng& rng);

FeatureVector features(const Subtree& subtree);

std::vector<FeatureVector> features_of(const std::vector<Subtree>& subtrees);

std::string features_csv(const std::vector<FeatureVector>& rows);

void write_subtrees(const std::vector<Subtree>& subtrees, std::ostream& out);
std::vector<Subtree> read_subtrees(std::istream& in);
void save_subtrees(const std::vector<Subtree>& subtrees, const std::string& path);
std::vector<Subtree> load_subtrees(const std::string& path);

} // namespace cascade
