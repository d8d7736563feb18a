#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cascade/branching.hpp"
#include "cascade/engine.hpp"
#include "cascade/metrics.hpp"
#include "cascade/structure.hpp"

namespace cascade {

/// Rows of (features, binary label); all rows share one dimensionality.
class Dataset {
  public:
    Dataset() = default;
    explicit Dataset(std::vector<std::string> feature_names)
        : feature_names_(std::move(feature_names)) {}

    void add_row(std::span<const double> features, int label);
    std::size_t size() const { return labels_.size(); }
    std::size_t n_features() const { return feature_names_.size(); }
    double value(std::size_t row, std::size_t col) const {
        return values_[row * n_features() + col];
    }
    int label(std::size_t row) const { return labels_[row]; }
    const std::vector<std::string>& feature_names() const { return feature_names_; }

    std::string to_csv() const;
    static Dataset from_csv(std::istream& in);

  private:
    std::vector<std::string> feature_names_;
    std::vector<double> values_; // row-major
    std::vector<int> labels_;
};

struct ForestParams {
    int n_trees = 100;
    int max_depth = 8;
    double subsample_fraction = 0.8;
    int features_per_split = 0; // 0: round(sqrt(#features))
    std::uint64_t rng_seed = 0;
};

/// Bagged Gini decision trees; prediction is the fraction of trees voting 1.
class ForestClassifier {
  public:
    static ForestClassifier train(const Dataset& data, const ForestParams& params,
                                  int jobs = 1);

    double predict(std::span<const double> features) const;
    const ForestParams& params() const { return params_; }

  private:
    struct Node {
        int feature = -1; // -1: leaf
        double threshold = 0.0;
        std::int32_t left = -1, right = -1;
        int vote = 0;
    };
    std::vector<std::vector<Node>> trees_;
    ForestParams params_;
};

/// Probability that a random positive outranks a random negative; ties
/// count one half (rank-statistic form).
double auc(std::span<const std::pair<double, int>> scores);

struct TaskResult {
    double auc = 0.0;
    std::size_t n_train = 0;
    std::size_t n_test = 0;
    std::vector<std::pair<std::string, double>> feature_aucs; // single-feature test AUCs
};

/// Held-out evaluation shared by the prediction tasks: deterministic
/// shuffle, 80/20 split, forest on the training part, AUC on the rest.
TaskResult evaluate_dataset(const Dataset& data, Rng& rng, const ForestParams& params = {},
                            int jobs = 1);

/// Exposed adopters vs. exposed non-adopters of one cascade (balanced).
TaskResult adoption_task(const Cascade& cascade, const CascadeTree& tree,
                         const SocialGraph& graph, Rng& rng, std::size_t max_per_side = 0,
                         int jobs = 1);

/// Which of two subtree corpora a fragment came from (balanced).
TaskResult differentiate_task(const std::vector<FeatureVector>& subtrees_a,
                              const std::vector<FeatureVector>& subtrees_b, Rng& rng,
                              int jobs = 1);

/// Real sampled subtrees vs. synthetic ones generated from `model` at the
/// same depth. Lower AUC means the model imitates the data better.
TaskResult real_vs_synthetic_task(const std::vector<Subtree>& real, const BranchingModel& model,
                                  Rng& rng, int jobs = 1);

} // namespace cascade
