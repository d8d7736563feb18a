#include "cascade/learn.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <numeric>
#include <sstream>
#include <unordered_map>

#include "cascade/util.hpp"

namespace cascade {

void Dataset::add_row(std::span<const double> features, int label) {
    if (features.size() != n_features())
        throw InvalidArgument("dataset row has wrong dimensionality");
    values_.insert(values_.end(), features.begin(), features.end());
    labels_.push_back(label != 0 ? 1 : 0);
}

std::string Dataset::to_csv() const {
    std::ostringstream out;
    for (const auto& name : feature_names_) out << name << ',';
    out << "label\n";
    for (std::size_t r = 0; r < size(); ++r) {
        for (std::size_t c = 0; c < n_features(); ++c) out << format_double(value(r, c)) << ',';
        out << labels_[r] << "\n";
    }
    return out.str();
}

Dataset Dataset::from_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw InvalidArgument("empty dataset csv");
    std::vector<std::string> names;
    std::size_t start = 0;
    while (start <= line.size()) {
        const auto comma = line.find(',', start);
        const auto end = comma == std::string::npos ? line.size() : comma;
        names.emplace_back(line.substr(start, end - start));
        if (comma == std::string::npos) break;
        start = comma + 1;
    }
    if (names.empty() || names.back() != "label")
        throw InvalidArgument("dataset csv must end with a 'label' column");
    names.pop_back();
    Dataset data(names);
    std::vector<double> row(names.size());
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::size_t pos = 0;
        for (std::size_t c = 0; c < names.size(); ++c) {
            const auto comma = line.find(',', pos);
            if (comma == std::string::npos) throw InvalidArgument("short dataset row: " + line);
            row[c] = parse_double(std::string_view(line).substr(pos, comma - pos));
            pos = comma + 1;
        }
        const int label = static_cast<int>(parse_int(std::string_view(line).substr(pos)));
        data.add_row(row, label);
    }
    return data;
}

namespace {

struct TreeBuilder {
    const Dataset& data;
    const ForestParams& params;
    Rng rng;
    std::vector<std::uint32_t> rows; // bootstrap sample, partitioned in place
    std::vector<std::pair<double, int>> scratch;
    std::vector<int> feature_pool;

    struct Node {
        int feature = -1;
        double threshold = 0.0;
        std::int32_t left = -1, right = -1;
        int vote = 0;
    };
    std::vector<Node> nodes;

    int leaf(std::int64_t pos, std::int64_t total) {
        Node n;
        n.vote = 2 * pos > total ? 1 : 0;
        nodes.push_back(n);
        return static_cast<int>(nodes.size() - 1);
    }

    // Builds the subtree over rows[begin, end); returns its node index.
    int build(std::size_t begin, std::size_t end, int depth) {
        const auto total = static_cast<std::int64_t>(end - begin);
        std::int64_t pos = 0;
        for (std::size_t i = begin; i < end; ++i) pos += data.label(rows[i]);
        if (depth >= params.max_depth || total < 2 || pos == 0 || pos == total)
            return leaf(pos, total);

        const int per_split = params.features_per_split > 0
                                  ? params.features_per_split
                                  : std::max(1, static_cast<int>(std::lround(std::sqrt(
                                                    static_cast<double>(data.n_features())))));
        const int f_take =
            std::min<int>(per_split, static_cast<int>(data.n_features()));
        for (int i = 0; i < f_take; ++i) {
            const auto j = i + static_cast<int>(rng.below(feature_pool.size() - i));
            std::swap(feature_pool[i], feature_pool[j]);
        }

        // Best Gini split over the sampled features.
        double best_score = std::numeric_limits<double>::infinity();
        int best_feature = -1;
        double best_threshold = 0.0;
        for (int fi = 0; fi < f_take; ++fi) {
            const int f = feature_pool[fi];
            scratch.clear();
            for (std::size_t i = begin; i < end; ++i)
                scratch.emplace_back(data.value(rows[i], f), data.label(rows[i]));
            std::sort(scratch.begin(), scratch.end());
            std::int64_t lpos = 0;
            for (std::int64_t l = 1; l < total; ++l) {
                lpos += scratch[l - 1].second;
                if (scratch[l].first <= scratch[l - 1].first) continue;
                const std::int64_t r = total - l;
                const std::int64_t rpos = pos - lpos;
                const double pl = static_cast<double>(lpos) / l;
                const double pr = static_cast<double>(rpos) / r;
                const double gini =
                    l * 2.0 * pl * (1.0 - pl) + r * 2.0 * pr * (1.0 - pr);
                if (gini < best_score) {
                    best_score = gini;
                    best_feature = f;
                    best_threshold = 0.5 * (scratch[l - 1].first + scratch[l].first);
                }
            }
        }
        if (best_feature < 0) return leaf(pos, total); // sampled features constant here

        const auto split = static_cast<std::size_t>(
            std::stable_partition(rows.begin() + begin, rows.begin() + end,
                                  [&](std::uint32_t r) {
                                      return data.value(r, best_feature) < best_threshold;
                                  }) -
            rows.begin());
        if (split == begin || split == end) return leaf(pos, total);

        Node n;
        n.feature = best_feature;
        n.threshold = best_threshold;
        nodes.push_back(n);
        const auto self = static_cast<int>(nodes.size() - 1);
        const int l = build(begin, split, depth + 1);
        const int r = build(split, end, depth + 1);
        nodes[self].left = l;
        nodes[self].right = r;
        return self;
    }
};

} // namespace

ForestClassifier ForestClassifier::train(const Dataset& data, const ForestParams& params,
                                         int jobs) {
    if (data.size() < 2) throw InvalidArgument("train: need at least 2 rows");
    if (data.n_features() == 0) throw InvalidArgument("train: need at least 1 feature");
    {
        std::int64_t pos = 0;
        for (std::size_t i = 0; i < data.size(); ++i) pos += data.label(i);
        if (pos == 0 || pos == static_cast<std::int64_t>(data.size()))
            throw InvalidArgument("train: both classes must be present");
    }

    ForestClassifier forest;
    forest.params_ = params;
    forest.trees_.resize(static_cast<std::size_t>(params.n_trees));
    const auto n_sample = std::max<std::size_t>(
        2, static_cast<std::size_t>(std::llround(params.subsample_fraction *
                                                 static_cast<double>(data.size()))));
    const Rng base(params.rng_seed);
    parallel_for(static_cast<std::size_t>(params.n_trees), jobs, [&](std::size_t t) {
        TreeBuilder builder{data, params, base.derive(0x54524545u, t), {}, {}, {}, {}};
        builder.rows.resize(n_sample);
        for (auto& r : builder.rows)
            r = static_cast<std::uint32_t>(builder.rng.below(data.size()));
        builder.feature_pool.resize(data.n_features());
        std::iota(builder.feature_pool.begin(), builder.feature_pool.end(), 0);
        builder.build(0, builder.rows.size(), 0);
        std::vector<Node> out(builder.nodes.size());
        for (std::size_t i = 0; i < out.size(); ++i) {
            out[i].feature = builder.nodes[i].feature;
            out[i].threshold = builder.nodes[i].threshold;
            out[i].left = builder.nodes[i].left;
            out[i].right = builder.nodes[i].right;
            out[i].vote = builder.nodes[i].vote;
        }
        forest.trees_[t] = std::move(out);
    });
    return forest;
}

double ForestClassifier::predict(std::span<const double> features) const {
    if (trees_.empty()) return 0.0;
    int votes = 0;
    for (const auto& tree : trees_) {
        int i = 0;
        while (tree[i].feature >= 0)
            i = features[static_cast<std::size_t>(tree[i].feature)] < tree[i].threshold
                    ? tree[i].left
                    : tree[i].right;
        votes += tree[i].vote;
    }
    return static_cast<double>(votes) / static_cast<double>(trees_.size());
}

double auc(std::span<const std::pair<double, int>> scores) {
    std::vector<std::pair<double, int>> sorted(scores.begin(), scores.end());
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });
    const std::size_t n = sorted.size();
    std::size_t n_pos = 0;
    for (const auto& [s, y] : sorted) n_pos += y != 0 ? 1 : 0;
    const std::size_t n_neg = n - n_pos;
    if (n_pos == 0 || n_neg == 0) throw InvalidArgument("auc: both classes must be present");

    // Average ranks within tied groups; ties then contribute exactly 1/2.
    double rank_sum_pos = 0.0;
    std::size_t i = 0;
    while (i < n) {
        std::size_t j = i;
        while (j < n && sorted[j].first == sorted[i].first) ++j;
        const double avg_rank = 0.5 * (static_cast<double>(i + 1) + static_cast<double>(j));
        for (std::size_t k = i; k < j; ++k)
            if (sorted[k].second != 0) rank_sum_pos += avg_rank;
        i = j;
    }
    const double np = static_cast<double>(n_pos);
    return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * static_cast<double>(n_neg));
}

TaskResult evaluate_dataset(const Dataset& data, Rng& rng, const ForestParams& params,
                            int jobs) {
    if (data.size() < 10) throw InvalidArgument("evaluate_dataset: too few rows");
    std::vector<std::uint32_t> order(data.size());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i)
        std::swap(order[i - 1], order[rng.below(i)]);
    const auto n_train = static_cast<std::size_t>(0.8 * static_cast<double>(order.size()));

    Dataset train_set(data.feature_names());
    std::vector<double> row(data.n_features());
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t c = 0; c < data.n_features(); ++c) row[c] = data.value(order[i], c);
        train_set.add_row(row, data.label(order[i]));
    }
    ForestParams p = params;
    if (p.rng_seed == 0) p.rng_seed = rng.next();
    const ForestClassifier forest = ForestClassifier::train(train_set, p, jobs);

    std::vector<std::pair<double, int>> scores;
    scores.reserve(order.size() - n_train);
    for (std::size_t i = n_train; i < order.size(); ++i) {
        for (std::size_t c = 0; c < data.n_features(); ++c) row[c] = data.value(order[i], c);
        scores.emplace_back(forest.predict(row), data.label(order[i]));
    }

    TaskResult result;
    result.auc = auc(scores);
    result.n_train = n_train;
    result.n_test = order.size() - n_train;
    for (std::size_t c = 0; c < data.n_features(); ++c) {
        std::vector<std::pair<double, int>> fs;
        fs.reserve(order.size() - n_train);
        for (std::size_t i = n_train; i < order.size(); ++i)
            fs.emplace_back(data.value(order[i], c), data.label(order[i]));
        double a = auc(fs);
        // A feature is as informative reversed as not.
        result.feature_aucs.emplace_back(data.feature_names()[c], std::max(a, 1.0 - a));
    }
    return result;
}

TaskResult adoption_task(const Cascade& cascade, const CascadeTree& tree,
                         const SocialGraph& graph, Rng& rng, std::size_t max_per_side,
                         int jobs) {
    // First exposer and exposure counts straight off the event log.
    std::unordered_map<NodeId, NodeId> first_exposer;
    std::unordered_map<NodeId, int> n_views;
    std::unordered_map<NodeId, double> last_view;
    for (const Event& ev : cascade.events) {
        if (ev.kind != EventKind::View) continue;
        first_exposer.emplace(ev.actor, ev.source);
        ++n_views[ev.actor];
        last_view[ev.actor] = ev.time;
    }

    std::vector<NodeId> adopters, bystanders;
    for (const auto& [actor, src] : first_exposer) {
        if (tree.index_of(actor) >= 0)
            adopters.push_back(actor);
        else
            bystanders.push_back(actor);
    }
    std::sort(adopters.begin(), adopters.end());
    std::sort(bystanders.begin(), bystanders.end());
    if (adopters.size() < 50 || bystanders.size() < 50)
        throw InvalidArgument("adoption_task: need >= 50 exposed adopters and non-adopters");

    std::size_t per_side = std::min(adopters.size(), bystanders.size());
    if (max_per_side > 0) per_side = std::min(per_side, max_per_side);
    auto draw = [&](std::vector<NodeId>& pool) {
        for (std::size_t i = 0; i < per_side; ++i) {
            const std::size_t j = i + rng.below(pool.size() - i);
            std::swap(pool[i], pool[j]);
        }
        pool.resize(per_side);
    };
    draw(adopters);
    draw(bystanders);

    Dataset data(std::vector<std::string>{"degree", "is_page", "mutual_with_exposer",
                                          "prior_adopted_friends", "exposures",
                                          "initiation_fraction", "community_match"});
    auto add = [&](NodeId v, int label) {
        const NodeId exposer = first_exposer.at(v);
        const auto vi = tree.index_of(v);
        const double cutoff = vi >= 0 ? tree.adoption_time(vi) : last_view.at(v);
        int prior = 0;
        for (NodeId f : graph.neighbors(v)) {
            const auto fi = tree.index_of(f);
            if (fi >= 0 && tree.adoption_time(fi) < cutoff) ++prior;
        }
        const double row[7] = {
            static_cast<double>(graph.degree(v)),
            graph.node(v).is_page ? 1.0 : 0.0,
            static_cast<double>(graph.mutual_friends(v, exposer)),
            static_cast<double>(prior),
            static_cast<double>(n_views.at(v)),
            graph.initiation_fraction(v),
            graph.node(v).community == graph.node(exposer).community ? 1.0 : 0.0,
        };
        data.add_row(row, label);
    };
    for (NodeId v : adopters) add(v, 1);
    for (NodeId v : bystanders) add(v, 0);
    return evaluate_dataset(data, rng, {}, jobs);
}

namespace {

Dataset feature_dataset(const std::vector<FeatureVector>& positives,
                        const std::vector<FeatureVector>& negatives, std::size_t per_side) {
    Dataset data(FeatureVector::names());
    for (std::size_t i = 0; i < per_side; ++i) data.add_row(positives[i].values(), 1);
    for (std::size_t i = 0; i < per_side; ++i) data.add_row(negatives[i].values(), 0);
    return data;
}

} // namespace

TaskResult differentiate_task(const std::vector<FeatureVector>& subtrees_a,
                              const std::vector<FeatureVector>& subtrees_b, Rng& rng,
                              int jobs) {
    if (subtrees_a.size() < 100 || subtrees_b.size() < 100)
        throw InvalidArgument("differentiate_task: need >= 100 subtrees per side");
    const std::size_t per_side = std::min(subtrees_a.size(), subtrees_b.size());
    const Dataset data = feature_dataset(subtrees_a, subtrees_b, per_side);
    return evaluate_dataset(data, rng, {}, jobs);
}

TaskResult real_vs_synthetic_task(const std::vector<Subtree>& real, const BranchingModel& model,
                                  Rng& rng, int jobs) {
    if (real.size() < 100)
        throw InvalidArgument("real_vs_synthetic_task: need >= 100 real subtrees");
    const int depth = real.front().depth_limit;
    const std::vector<Subtree> synthetic = generate(model, real.size(), depth, rng);
    const Dataset data = feature_dataset(features_of(real), features_of(synthetic), real.size());
    return evaluate_dataset(data, rng, {}, jobs);
}

} // namespace cascade
