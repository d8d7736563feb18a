#include "cascade/structure.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <istream>
#include <map>
#include <ostream>
#include <sstream>
#include <unordered_map>

#include "cascade/util.hpp"

namespace cascade {

std::vector<std::pair<NodeId, NodeId>> Subtree::edges() const {
    std::vector<std::pair<NodeId, NodeId>> out;
    out.reserve(nodes.size() > 0 ? nodes.size() - 1 : 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (parent[i] >= 0) out.emplace_back(nodes[i], nodes[parent[i]]);
    return out;
}

std::vector<int> Subtree::indegrees() const {
    std::vector<int> deg(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (parent[i] >= 0) ++deg[parent[i]];
    return deg;
}

std::vector<int> Subtree::depths() const {
    std::vector<int> d(nodes.size(), 0);
    for (std::size_t i = 0; i < nodes.size(); ++i)
        if (parent[i] >= 0) d[i] = d[parent[i]] + 1;
    return d;
}

const std::vector<std::string>& FeatureVector::names() {
    static const std::vector<std::string> names = {
        "n_nodes",          "n_edges", "leaf_fraction", "indegree_entropy",
        "mean_internal_indegree", "depth"};
    return names;
}

namespace {

Subtree extract(const CascadeTree& tree, CascadeTree::Index root, int depth) {
    Subtree st;
    st.root = tree.id(root);
    st.depth_limit = depth;
    st.nodes.push_back(st.root);
    st.parent.push_back(-1);
    // BFS frontier of (tree index, subtree index) pairs.
    std::vector<std::pair<CascadeTree::Index, std::int32_t>> frontier{{root, 0}};
    std::vector<std::pair<CascadeTree::Index, std::int32_t>> next;
    for (int level = 0; level < depth && !frontier.empty(); ++level) {
        next.clear();
        for (const auto& [ti, si] : frontier) {
            for (CascadeTree::Index c : tree.children(ti)) {
                const auto ci = static_cast<std::int32_t>(st.nodes.size());
                st.nodes.push_back(tree.id(c));
                st.parent.push_back(si);
                next.emplace_back(c, ci);
            }
        }
        frontier.swap(next);
    }
    return st;
}

} // namespace

std::vector<Subtree> sample_subtrees(const CascadeTree& tree, std::size_t count, int depth,
                                     Rng& rng) {
    const CascadeTree* ptr = &tree;
    return sample_subtrees(std::span<const CascadeTree* const>(&ptr, 1), count, depth, rng);
}

std::vector<Subtree> sample_subtrees(std::span<const CascadeTree* const> trees,
                                     std::size_t count, int depth, Rng& rng) {
    if (depth < 0) throw InvalidArgument("subtree depth must be >= 0");
    std::vector<std::uint64_t> cumulative;
    std::uint64_t total = 0;
    for (const CascadeTree* t : trees) {
        total += t->size();
        cumulative.push_back(total);
    }
    if (total == 0) throw InvalidArgument("subtree sampling requires a nonempty tree");

    std::vector<Subtree> out;
    out.reserve(count);
    for (std::size_t i = 0; i < count; ++i) {
        const std::uint64_t pick = rng.below(total);
        const auto which = static_cast<std::size_t>(
            std::upper_bound(cumulative.begin(), cumulative.end(), pick) - cumulative.begin());
        const auto offset = which == 0 ? pick : pick - cumulative[which - 1];
        out.push_back(
            extract(*trees[which], static_cast<CascadeTree::Index>(offset), depth));
    }
    return out;
}

FeatureVector features(const Subtree& subtree) {
    const std::size_t n = subtree.size();
    if (n == 0) throw InvalidArgument("features: empty subtree");
    const auto deg = subtree.indegrees();
    const auto dep = subtree.depths();

    std::size_t leaves = 0;
    std::int64_t internal_children = 0;
    std::size_t internal = 0;
    int max_depth = 0;
    std::map<int, std::size_t> hist;
    for (std::size_t i = 0; i < n; ++i) {
        ++hist[deg[i]];
        if (deg[i] == 0) {
            ++leaves;
        } else {
            ++internal;
            internal_children += deg[i];
        }
        max_depth = std::max(max_depth, dep[i]);
    }

    double entropy = 0.0;
    for (const auto& [d, c] : hist) {
        const double p = static_cast<double>(c) / static_cast<double>(n);
        entropy -= p * std::log2(p);
    }

    FeatureVector f;
    f.n_nodes = static_cast<double>(n);
    f.n_edges = static_cast<double>(n - 1);
    f.leaf_fraction = static_cast<double>(leaves) / static_cast<double>(n);
    f.indegree_entropy = entropy;
    f.mean_internal_indegree =
        internal > 0 ? static_cast<double>(internal_children) / static_cast<double>(internal)
                     : 0.0;
    f.depth = static_cast<double>(max_depth);
    return f;
}

std::vector<FeatureVector> features_of(const std::vector<Subtree>& subtrees) {
    std::vector<FeatureVector> out;
    out.reserve(subtrees.size());
    for (const Subtree& st : subtrees) out.push_back(features(st));
    return out;
}

std::string features_csv(const std::vector<FeatureVector>& rows) {
    std::ostringstream out;
    const auto& names = FeatureVector::names();
    for (std::size_t i = 0; i < names.size(); ++i) out << (i ? "," : "") << names[i];
    out << "\n";
    for (const FeatureVector& f : rows) {
        const auto v = f.values();
        for (std::size_t i = 0; i < v.size(); ++i) out << (i ? "," : "") << format_double(v[i]);
        out << "\n";
    }
    return out.str();
}

void write_subtrees(const std::vector<Subtree>& subtrees, std::ostream& out) {
    const int depth = subtrees.empty() ? 0 : subtrees.front().depth_limit;
    out << "#subtrees " << subtrees.size() << " depth " << depth << "\n";
    for (std::size_t i = 0; i < subtrees.size(); ++i) {
        const Subtree& st = subtrees[i];
        out << "S " << i << ' ' << st.root << ' ' << st.size() << "\n";
        for (std::size_t j = 0; j < st.size(); ++j)
            if (st.parent[j] >= 0)
                out << "E " << st.nodes[j] << ' ' << st.nodes[st.parent[j]] << "\n";
    }
}

std::vector<Subtree> read_subtrees(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty subtree file");
    auto head = split_ws(line);
    if (head.size() != 4 || head[0] != "#subtrees" || head[2] != "depth")
        throw InvalidArgument("bad subtree header: " + line);
    const auto count = static_cast<std::size_t>(parse_int(head[1]));
    const int depth = static_cast<int>(parse_int(head[3]));

    std::vector<Subtree> out;
    out.reserve(count);
    // Edges arrive grouped under their S line in BFS order (as written).
    std::vector<std::pair<NodeId, NodeId>> pending;
    NodeId root = 0;
    std::size_t expect_nodes = 0;
    bool open = false;
    auto flush = [&]() {
        if (!open) return;
        Subtree st;
        st.root = root;
        st.depth_limit = depth;
        st.nodes.push_back(root);
        st.parent.push_back(-1);
        std::unordered_map<NodeId, std::int32_t> index{{root, 0}};
        for (const auto& [child, par] : pending) {
            const auto pit = index.find(par);
            if (pit == index.end())
                throw InvalidArgument("subtree file: edge parent before child required");
            const auto ci = static_cast<std::int32_t>(st.nodes.size());
            if (!index.emplace(child, ci).second)
                throw InvalidArgument("subtree file: duplicate child node");
            st.nodes.push_back(child);
            st.parent.push_back(pit->second);
        }
        if (st.size() != expect_nodes)
            throw InvalidArgument("subtree file: node count mismatch");
        out.push_back(std::move(st));
        pending.clear();
        open = false;
    };
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        auto tok = split_ws(line);
        if (tok[0] == "S") {
            flush();
            if (tok.size() != 4) throw InvalidArgument("bad subtree line: " + line);
            root = static_cast<NodeId>(parse_int(tok[2]));
            expect_nodes = static_cast<std::size_t>(parse_int(tok[3]));
            open = true;
        } else if (tok[0] == "E") {
            if (!open || tok.size() != 3) throw InvalidArgument("bad edge line: " + line);
            pending.emplace_back(static_cast<NodeId>(parse_int(tok[1])),
                                 static_cast<NodeId>(parse_int(tok[2])));
        } else {
            throw InvalidArgument("unrecognized subtree line: " + line);
        }
    }
    flush();
    if (out.size() != count) throw InvalidArgument("subtree file: count mismatch");
    return out;
}

void save_subtrees(const std::vector<Subtree>& subtrees, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    std::ostringstream buf;
    write_subtrees(subtrees, buf);
    out << buf.str();
    if (!out) throw std::runtime_error("write failed: " + path);
}

std::vector<Subtree> load_subtrees(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open subtree file: " + path);
    return read_subtrees(in);
}

} // namespace cascade
