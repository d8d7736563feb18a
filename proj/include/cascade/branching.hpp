#pragma once

#include <iosfwd>
#include <string>
#include <variant>
#include <vector>

#include "cascade/structure.hpp"

namespace cascade {

/// Each participant recruits k others, each joining with probability p:
/// offspring ~ Binomial(k, p).
struct BaselineModel {
    int k = 1;
    double p = 0.0;
};

/// Offspring counts drawn i.i.d. from the fitted in-degree distribution.
struct DegreeModel {
    std::vector<double> indegree_pmf; // over {0..D_max}
};

/// Offspring count conditioned on the parent's realized in-degree.
struct ConditionalDegreeModel {
    std::vector<double> root_pmf;
    std::vector<std::vector<double>> cond_pmf; // [parent indegree][child indegree]
    double smoothing_alpha = 0.5;
};

using BranchingModel = std::variant<BaselineModel, DegreeModel, ConditionalDegreeModel>;

enum class ModelKind { Baseline, Degree, ConditionalDegree };

ModelKind model_kind_of(const BranchingModel& model);
std::string model_kind_name(ModelKind kind);
ModelKind model_kind_from_name(const std::string& name);

inline constexpr double kDefaultSmoothingAlpha = 0.5;

/// Fits a model from sampled subtrees. Nodes sitting at the depth limit
/// have censored offspring and are excluded from all offspring statistics.
BranchingModel fit(ModelKind kind, const std::vector<Subtree>& subtrees,
                   double smoothing_alpha = kDefaultSmoothingAlpha);

/// Generates `count` subtrees truncated at depth `d`.
std::vector<Subtree> generate(const BranchingModel& model, std::size_t count, int depth,
                              Rng& rng);

/// Sum of log offspring probabilities over non-truncated nodes; -inf for
/// events impossible under the model.
double loglik(const BranchingModel& model, const Subtree& subtree);

void write_model(const BranchingModel& model, std::ostream& out);
BranchingModel read_model(std::istream& in);
void save_model(const BranchingModel& model, const std::string& path);
BranchingModel load_model(const std::string& path);

} // namespace cascade
