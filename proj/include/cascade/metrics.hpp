#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cascade/engine.hpp"

namespace cascade {

/// Per-cascade descriptives. Optional fields are absent when undefined
/// (e.g. delay of a cascade nobody joined).
struct CascadeSummary {
    std::size_t adoptions = 0;
    double exposures_per_adopter = 0.0;
    double top1pct_share = 0.0;
    std::optional<double> mean_mutual_friends;
    std::optional<double> mean_prior_adopted_friends;
    std::optional<double> median_prior_adopted_friends;
    std::optional<double> mean_adoption_delay;
    std::optional<double> reproduction_number;
};

/// Hazard-style exposure curve: of those who received a k-th view while
/// still susceptible, how many went on to adopt off that view.
struct ExposureCurve {
    struct Point {
        std::int64_t n_at_risk = 0;
        std::int64_t n_adopted = 0;
        double p = 0.0;
    };
    std::map<int, Point> points; // k -> point

    void merge(const ExposureCurve& other);
};

struct StatusDifferential {
    std::optional<double> mean_if_parent;
    std::optional<double> mean_if_child;
    std::optional<double> mean_if_exposed_only;
    std::optional<double> friend_count_gap; // mean degree(parents) - mean degree(children)
};

CascadeSummary summarize(const Cascade& cascade, const CascadeTree& tree,
                         const SocialGraph& graph);

/// Mean child count over internal (non-leaf) nodes. Undefined when every
/// node is a leaf.
double reproduction_number(const CascadeTree& tree);

/// Same statistic split by tree depth of the internal node.
std::map<int, double> reproduction_number_by_depth(const CascadeTree& tree);

ExposureCurve exposure_curve(const Cascade& cascade);

StatusDifferential status_differential(const Cascade& cascade, const CascadeTree& tree,
                                       const SocialGraph& graph);

struct CalibrationResult {
    ProtocolSpec spec;
    double multiplier = 1.0;
    double measured_r = 0.0;
    int evaluations = 0;
};

/// Bisects a multiplier on response.base_rate until the mean reproduction
/// number over `runs` fixed-seed simulations lands within tol of target_R.
/// Throws on an unreachable target or a non-monotone bracket.
CalibrationResult calibrate_reproduction(const SocialGraph& graph, const ProtocolSpec& spec,
                                         const std::vector<NodeId>& seeds, double target_r,
                                         double tol, int runs, double horizon, Rng rng,
                                         int jobs = 1);

std::string summary_csv_header();
std::string summary_csv_row(const std::string& protocol, int replicate,
                            const CascadeSummary& summary);
std::string exposure_curve_csv(const ExposureCurve& curve);

} // namespace cascade
